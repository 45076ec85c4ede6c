import configparser
import math

import numpy as np
import pytest

from hopfcole import ConfigError, Interval, RadialBall
from hopfcole import io
from hopfcole.expr import Potential

BASE = """
[domain]
kind = interval
a = 0
b = 1

[params]
nu = 1
r = 2
h0 = 1

[coupling]
name = linear-plus-potential
potential = sin(2*pi*x)
"""


def test_potential_vocabulary():
    x = np.linspace(0, 1, 7)
    assert np.allclose(Potential("sin(2*pi*x) + cos(x)**2 - exp(-x)/3")(x),
                       np.sin(2 * np.pi * x) + np.cos(x) ** 2 - np.exp(-x) / 3)
    assert np.allclose(Potential("poly(1, 0, -2, 0.5)")(x), 1 - 2 * x**2 + 0.5 * x**3)
    assert np.allclose(Potential("e")(x), math.e)
    assert Potential("0").is_zero


@pytest.mark.parametrize("text", ["__import__('os')", "x.real", "y + 1", "tan(x)", "sin(x, 2)",
                                  "[1, 2]", "x if x else 1", "'a'", "sin(x", "lambda: 0"])
def test_potential_rejects(text):
    with pytest.raises(ConfigError):
        Potential(text)


def parse(text):
    p = io._parser()
    p.read_string(text)
    return io.parse_config(p)


def test_parse_base_config():
    inst = parse(BASE)
    assert inst.domain == Interval(0.0, 1.0)
    assert inst.params.mu == pytest.approx(2.0)
    assert inst.coupling.name == "linear-plus-potential" and inst.coupling.monotone
    assert inst.solver.n == 257
    assert inst.coupling(np.array([0.25]), np.array([1.0]))[0] == pytest.approx(2.0)


def test_parse_radial_and_overrides():
    text = BASE.replace("kind = interval\na = 0\nb = 1", "kind = radial\nR = 2\nd = 3")
    text = text.replace("r = 2\nh0 = 1", "r_conj = 3\nl0 = 2")
    text += "\n[solver]\nn = 65\neps_schedule = 1e-3, 1e-6\ngrad_tol = 1e-9\n"
    inst = parse(text)
    assert inst.domain == RadialBall(2.0, 3)
    assert inst.params.r == pytest.approx(1.5)
    assert inst.solver.eps_schedule == (1e-3, 1e-6) and inst.solver.n == 65
    again = io.config_from_raw(inst.raw)
    assert again.domain == inst.domain and again.solver == inst.solver


@pytest.mark.parametrize("old, new", [
    ("r = 2", "r = 2\nr_conj = 2"),
    ("h0 = 1", ""),
    ("kind = interval", "kind = torus"),
    ("name = linear-plus-potential", "name = exotic"),
    ("potential = sin(2*pi*x)", ""),
    ("nu = 1", "nu = -1"),
    ("nu = 1", "nu = one"),
    ("b = 1", "b = 0"),
    ("[domain]", "[domian]"),
])
def test_config_errors(old, new):
    with pytest.raises(ConfigError):
        parse(BASE.replace(old, new))


def test_zero_and_power_couplings():
    inst = parse(BASE.replace("name = linear-plus-potential\npotential = sin(2*pi*x)", "name = zero"))
    assert inst.coupling.name == "zero"
    inst = parse(BASE.replace("name = linear-plus-potential", "name = power\ncoef = 2\nexponent = 3"))
    assert inst.coupling(np.array([0.0]), np.array([2.0]))[0] == pytest.approx(16.0)
    assert inst.summary_block()["coupling"]["potential"] == "sin(2*pi*x)"
    with pytest.raises(ConfigError):
        parse(BASE.replace("name = linear-plus-potential", "name = linear"))


def test_unknown_solver_key():
    with pytest.raises(ConfigError):
        parse(BASE + "\n[solver]\nmaxiter = 3\n")


def test_solution_round_trip(tmp_path):
    x = np.linspace(0, 1, 5)
    vals = [x, np.sin(x) / 3, np.exp(x) * math.pi, np.sqrt(x + 1e-300)]
    io.write_solution(tmp_path / "s.csv", *vals)
    table = io.read_solution(tmp_path / "s.csv")
    for name, v in zip(io.COLUMNS, vals):
        assert np.array_equal(table[name], v)       # 17 significant digits round-trip exactly
    (tmp_path / "bad.csv").write_text("a,b\n1,2\n")
    with pytest.raises(ConfigError):
        io.read_solution(tmp_path / "bad.csv")
    with pytest.raises(ConfigError):
        io.read_solution(tmp_path / "missing.csv")


def test_grid_check():
    table = {"x": np.linspace(0, 1, 9), "u": np.zeros(9), "m": np.ones(9), "phi": np.ones(9)}
    assert io.grid_functions(Interval(0, 1), table)["m"].n == 9
    with pytest.raises(ConfigError):
        io.grid_functions(Interval(0, 2), table)
