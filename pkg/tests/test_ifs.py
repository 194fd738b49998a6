import numpy as np
import pytest
from hypothesis import given, strategies as st

from ifslab.errors import Timeout
from ifslab.geometry import TORUS
from ifslab.ifs import (TRANSITIVITY_NAMES, FinitePermModel, Word, apply_word, coverage_test,
                        finite_transitivity_suite, hitting_test, random_model, suite_agrees)
from ifslab.maps import Identity, IntegrableTwist, KickedTwist
from oracles import transitivity_oracle

perms = st.integers(1, 9).flatmap(lambda n: st.tuples(
    st.just(n), st.permutations(range(n)), st.permutations(range(n))))


def test_word_basics():
    w = Word((0, 1, -2), group=True)
    assert str(w) == "fgG" and len(w) == 3
    assert w.inverse().letters == (1, -2, -1)
    assert str(Word()) == "e"
    with pytest.raises(ValueError):
        Word((0, -1))


def test_apply_word_examples(rng):
    f = IntegrableTwist((0.0, 1.0))
    g = KickedTwist(0.4)
    assert apply_word([], [f, g], (0.3, 0.4)) == (0.3, 0.4)
    np.testing.assert_allclose(apply_word([0, 0], [f, g], (0.0, 0.25)), (0.5, 0.25))
    p = rng.random((50, 2)) * [1, 0.2] + [0, 0.4]
    w = Word((0, 1, 1, 0, 1), group=True)
    q = apply_word(w, [f, g], p)
    back = apply_word(w.inverse(), [f, g], q)
    d = np.abs(back - p)
    d[:, 0] = np.minimum(d[:, 0], 1 - d[:, 0])
    assert d.max() < 1e-9
    with pytest.raises(ValueError):
        apply_word([2], [f, g], (0.1, 0.1))


def test_finite_examples():
    m = FinitePermModel.from_cycles(3, [(0, 1, 2)])
    assert all(finite_transitivity_suite(m).values())
    m = FinitePermModel.from_cycles(4, [(0, 1), (2, 3)], [(0, 2), (1, 3)])
    assert all(finite_transitivity_suite(m).values())
    m = FinitePermModel.from_cycles(4, [(0, 1)], [(0, 1)])
    assert not any(finite_transitivity_suite(m).values())
    assert list(finite_transitivity_suite(m)) == list(TRANSITIVITY_NAMES)


def test_model_validation():
    with pytest.raises(ValueError):
        FinitePermModel(3, (0, 0, 1), (0, 1, 2))
    with pytest.raises(ValueError):
        FinitePermModel(0, (), ())


def _check_against_oracle(m):
    rep = finite_transitivity_suite(m)
    ref = transitivity_oracle(m.n, m.f, m.g)
    for k, v in ref.items():
        assert rep[k] == v, (k, m)
    assert suite_agrees(rep)


def test_suite_matches_oracle_random(rng):
    seen = set()
    for _ in range(300):
        m = random_model(rng, 9)
        _check_against_oracle(m)
        seen.add(all(finite_transitivity_suite(m).values()))
    assert seen == {True, False}


@given(perms)
def test_suite_matches_oracle_property(nfg):
    n, f, g = nfg
    _check_against_oracle(FinitePermModel(n, tuple(f), tuple(g)))


def test_coverage_identity():
    rep = coverage_test(Identity(), Identity(), (0.3, 0.3), 16, 500)
    assert rep.covered == 1 and rep.fraction == 1 / 256 and rep.saturated
    assert rep.steps == 50


def test_coverage_confined_by_twist():
    f = IntegrableTwist((0.0, 1.0))
    rep = coverage_test(f, f, (0.5, 0.5), 32, 10_000)
    assert rep.fraction <= 2 / 32
    assert len(rep.rows_touched()) <= 2


def test_coverage_twist_and_kicked_torus():
    f = IntegrableTwist((0.0, 1.0), chart=TORUS)
    g = KickedTwist(1.5, chart=TORUS)
    rep = coverage_test(f, g, (0.1, 0.5), 32, 10_000)
    assert rep.fraction >= 0.9
    assert np.all(np.diff(rep.fractions) >= 0) and 0 <= min(rep.fractions)
    again = coverage_test(f, g, (0.1, 0.5), 32, 10_000)
    assert again.fractions == rep.fractions
    assert np.array_equal(again.first_hit, rep.first_hit)


def test_coverage_args():
    with pytest.raises(ValueError):
        coverage_test(Identity(), Identity(), (0.3, 0.3), 4, 10)
    with pytest.raises(ValueError):
        coverage_test(Identity(), Identity(chart=TORUS), (0.3, 0.3), 16, 10)


def test_coverage_report_outputs(tmp_path):
    f = IntegrableTwist((0.0, 1.0))
    rep = coverage_test(f, f, (0.5, 0.5), 16, 30)
    rep.write_csv(tmp_path / "c.csv")
    rep.write_json(tmp_path / "c.json")
    lines = (tmp_path / "c.csv").read_text().splitlines()
    assert lines[0] == "word_length,fraction" and len(lines) == rep.steps + 2
    assert '"covered"' in (tmp_path / "c.json").read_text()


def test_hitting_examples():
    f = IntegrableTwist((0.0, 1.0), chart=TORUS)
    g = KickedTwist(1.5, chart=TORUS)
    assert len(hitting_test(f, g, (3, 4), (3, 4), 32, 10)) == 0
    # y in cell row 8 moves x by about 8/32 + 0.25
    w = hitting_test(f, g, (0, 8), (8, 8), 32, 10)
    assert len(w) == 1
    w = hitting_test(f, g, (5, 5), (20, 28), 32, 100_000)
    assert str(w) == "gfgfggfgf"  # first-run pin
    with pytest.raises(Timeout):
        hitting_test(f, f, (5, 5), (20, 28), 32, 500)
    with pytest.raises(ValueError):
        hitting_test(f, g, (40, 0), (0, 0), 32, 10)


def test_hitting_group_mode_not_longer():
    f = IntegrableTwist((0.0, 1.0), chart=TORUS)
    g = KickedTwist(1.5, chart=TORUS)
    semi = hitting_test(f, g, (5, 5), (20, 28), 32, 100_000)
    grp = hitting_test(f, g, (5, 5), (20, 28), 32, 100_000, group=True)
    assert len(grp) <= len(semi)
