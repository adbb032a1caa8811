import numpy as np
import pytest

from kinshock.canonical import reduce_model
from kinshock.errors import ConfigError
from kinshock.manifolds import gamma0_norm
from kinshock.model import check_hypotheses
from kinshock.presets import GAMMA0_TARGET, get_preset, preset_names


def test_demo_m1():
    m = get_preset("demo-m1")
    assert check_hypotheses(m).passed
    assert reduce_model(m).m == 1


def test_boltz_like_shape():
    assert get_preset("boltz-like").r == 5


def test_sing_spectrum():
    rep = check_hypotheses(get_preset("sing-8"))
    assert rep.passed
    assert rep.min_abs_eig_A == pytest.approx(2.0**-8, rel=1e-12)


@pytest.mark.parametrize("name", ["demo-m0", "demo-m1", "boltz-like", "sing-3"])
def test_gamma0_normalised(name):
    assert gamma0_norm(reduce_model(get_preset(name))) == pytest.approx(GAMMA0_TARGET, rel=1e-10)


def test_unknown_preset():
    with pytest.raises(ConfigError):
        get_preset("nope")
    assert "sing-12" in preset_names() and "sing-13" not in preset_names()
