import numpy as np
import pytest

from bec_linear import scenario
from bec_linear.errors import ContractError
from bec_linear.kernels import Convention
from bec_linear.scenario import InitialData


@pytest.mark.parametrize("text,kind,args", [
    ("EXAMPLE1", "EXAMPLE1", ()),
    ("constant(0.5)", "CONSTANT", (0.5,)),
    ("BUMP(1.0, 0.2, 3)", "BUMP", (1.0, 0.2, 3.0)),
    ("FILE('a.csv')", "FILE", ("a.csv",)),
])
def test_initial_parse(text, kind, args):
    init = InitialData.parse(text)
    assert init.kind == kind and init.args == args


@pytest.mark.parametrize("text", ["NOPE", "CONSTANT", "BUMP(1, 2)", "FILE", "a b"])
def test_initial_parse_rejects(text):
    with pytest.raises(ContractError):
        InitialData.parse(text)


def test_example_data_are_occupation_perturbations():
    x = np.geomspace(0.05, 6.0, 40)
    for conv in Convention:
        c = conv.scale
        n0 = 1.0 / np.expm1(2 * c * x * x)
        u = scenario.initial_state(InitialData("EXAMPLE1"), x, conv)
        assert np.allclose(n0 * (1 + n0) * x * x * u, (1.02 / (1 + x * x) - 1) * n0, rtol=1e-12)
        u = scenario.initial_state(InitialData("EXAMPLE2"), x, conv)
        assert np.allclose(n0 * (1 + n0) * x * x * u, 0.2 * np.arctan(x / 10) * n0, rtol=1e-12)


def test_file_initial_data(tmp_path):
    p = tmp_path / "f.csv"
    p.write_text("x,f\n0,1\n10,2\n")
    u = scenario.initial_state(InitialData.parse(f"FILE({p})"), np.array([5.0]), Convention.SINH_X2)
    assert u[0] == pytest.approx(1.5)
    with pytest.raises(ContractError):
        scenario.initial_state(InitialData.parse(f"FILE({tmp_path / 'missing.csv'})"),
                               np.array([1.0]), Convention.SINH_X2)


def test_config_from_toml_with_overrides(tmp_path):
    p = tmp_path / "c.toml"
    p.write_text('grid.N = 64\ninitial = "CONSTANT(2)"\nnonlinear.C2 = 2.0\n')
    cfg = scenario.load_config(p, ["tau_end=0.5", "convention=SINH_HALF_X2"])
    assert cfg.N == 64 and cfg.tau_end == 0.5
    assert cfg.convention is Convention.SINH_HALF_X2
    assert cfg.nonlinear is not None and cfg.nonlinear.C2 == 2.0


@pytest.mark.parametrize("override", ["grid.N=8", "bogus=1", "dt=-1", "theta=1.5", "snapshots=[99.0]",
                                      "convention=NOPE", "N"])
def test_config_rejects(override):
    with pytest.raises(ContractError):
        scenario.load_config(None, [override])


def test_constant_scenario_is_stationary():
    cfg = scenario.load_config(None, ["grid.N=64", "initial=\"CONSTANT(0.5)\"", "tau_end=1.0",
                                      "dt=0.05"])
    res = scenario.execute(cfg)
    s = res.summary
    assert tuple(s) == scenario.SUMMARY_KEYS
    assert s["Cstar"] == pytest.approx(0.5, rel=1e-13)
    assert s["l2_final"] < 1e-20
    assert s["pc_final_ratio"] == pytest.approx(1.0, abs=1e-10)
    assert s["nonlinear"] is None


def test_config_dict_round_trip():
    cfg = scenario.load_config(None, ["initial=\"BUMP(1, 0.2, 3)\"", "nonlinear.enabled=true"])
    d = scenario.config_dict(cfg)
    assert d["initial"] == "BUMP(1.0, 0.2, 3.0)"
    assert d["nonlinear"]["C2"] == 1.0
