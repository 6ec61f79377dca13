"""Network architecture tests: shapes, depth scaling, init, dropout noise."""

import numpy as np
import pytest
import torch

from bevgan.errors import ConfigError
from bevgan.model import (
    PatchDiscriminator,
    UNetGenerator,
    init_weights,
    n_layers_for,
    patch_map_size,
    set_dropout_active,
)


class TestLayout:
    def test_discriminator_depth_grows_with_size(self):
        assert n_layers_for(64) == 1
        assert n_layers_for(128) == 2
        assert n_layers_for(256) == 3
        assert n_layers_for(1024) == 5

    def test_patch_map_arithmetic(self):
        assert patch_map_size(32) == 14
        assert patch_map_size(64) == 30
        assert patch_map_size(128) == 30
        assert patch_map_size(256) == 30

    @pytest.mark.parametrize("size", [64, 128, 256])
    def test_patch_map_shape_at_runtime(self, size):
        d = PatchDiscriminator(size, ndf=4)
        x = torch.zeros(1, 1, size, size)
        out = d(x, x)
        s = patch_map_size(size)
        assert out.shape == (1, 1, s, s)


class TestGenerator:
    def test_output_matches_input_shape(self):
        g = UNetGenerator(64, ngf=8)
        out = g(torch.zeros(2, 1, 64, 64))
        assert out.shape == (2, 1, 64, 64)

    def test_output_bounded_and_finite(self):
        torch.manual_seed(3)
        g = UNetGenerator(64, ngf=8)
        out = g(torch.rand(1, 1, 64, 64) * 2 - 1)
        assert torch.isfinite(out).all()
        assert out.min() >= -1.0 and out.max() <= 1.0

    def test_deep_model(self):
        g = UNetGenerator(256, ngf=4)
        out = g(torch.zeros(1, 1, 256, 256))
        assert out.shape == (1, 1, 256, 256)
        assert torch.isfinite(out).all()

    def test_rejects_non_power_of_two(self):
        with pytest.raises(ConfigError, match="power of two"):
            UNetGenerator(48)

    def test_rejects_too_small(self):
        with pytest.raises(ConfigError):
            UNetGenerator(8)

    def test_rejects_wrong_runtime_size(self):
        g = UNetGenerator(64, ngf=4)
        with pytest.raises(ConfigError, match="64"):
            g(torch.zeros(1, 1, 32, 32))


class TestInit:
    def test_seeded_init_reproducible(self):
        torch.manual_seed(5)
        a = UNetGenerator(64, ngf=8)
        init_weights(a)
        torch.manual_seed(5)
        b = UNetGenerator(64, ngf=8)
        init_weights(b)
        for pa, pb in zip(a.parameters(), b.parameters()):
            assert torch.equal(pa, pb)

    def test_conv_biases_zeroed_and_weights_narrow(self):
        torch.manual_seed(6)
        net = PatchDiscriminator(64, ndf=8)
        init_weights(net)
        conv_weights = []
        for mod in net.modules():
            if isinstance(mod, (torch.nn.Conv2d, torch.nn.ConvTranspose2d)):
                if mod.bias is not None:
                    assert torch.count_nonzero(mod.bias) == 0
                conv_weights.append(mod.weight.detach().reshape(-1))
            if isinstance(mod, torch.nn.BatchNorm2d):
                assert torch.count_nonzero(mod.bias) == 0
                assert abs(float(mod.weight.detach().mean()) - 1.0) < 0.02
        pooled = torch.cat(conv_weights)
        assert abs(float(pooled.std()) - 0.02) < 0.002


class TestDropoutNoise:
    def test_active_dropout_varies_with_seed(self):
        torch.manual_seed(7)
        g = UNetGenerator(64, ngf=8)
        g.eval()
        set_dropout_active(g, True)
        x = torch.rand(1, 1, 64, 64)
        with torch.no_grad():
            torch.manual_seed(0)
            a = g(x)
            torch.manual_seed(1)
            b = g(x)
        assert not torch.equal(a, b)

    def test_inactive_dropout_deterministic(self):
        torch.manual_seed(8)
        g = UNetGenerator(64, ngf=8)
        g.eval()
        set_dropout_active(g, False)
        x = torch.rand(1, 1, 64, 64)
        with torch.no_grad():
            torch.manual_seed(0)
            a = g(x)
            torch.manual_seed(1)
            b = g(x)
        assert torch.equal(a, b)

    def test_toggle_touches_only_dropout(self):
        g = UNetGenerator(64, ngf=4)
        g.eval()
        set_dropout_active(g, True)
        for mod in g.modules():
            if isinstance(mod, torch.nn.Dropout):
                assert mod.training
            else:
                assert not mod.training
