import json
import math

import numpy as np
import pytest

import pmlperm


def test_permanents_of_all_ones_two_by_two():
    j2 = np.ones((2, 2))
    assert pmlperm.permanent(j2) == 2.0
    assert pmlperm.log_permanent(j2) == pytest.approx(math.log(2.0))
    assert pmlperm.log_scaled_sinkhorn(j2) == pytest.approx(math.log(4.0) - 2.0)
    assert abs(pmlperm.log_bethe(j2)) < 1e-8
    assert pmlperm.log_sinkhorn([[1.0, 0.0], [0.0, 1.0]]) == pytest.approx(0.0)


def test_profile_of_sequence():
    p = pmlperm.profile_of_sequence(["a", "b", "b", "c"])
    assert p.freqs == [1, 2]
    assert p.counts == [2, 1]
    assert p.n == 4
    assert p.distinct == 3
    assert p == pmlperm.profile_of_string("abbc")
    assert len(pmlperm.all_profiles(5, 5)) == 7


def test_profile_probability_against_enumeration():
    # Two distinct symbols out of two draws from (0.5, 0.5).
    p = pmlperm.Profile([1], [2])
    assert pmlperm.profile_probability([0.5, 0.5], p) == pytest.approx(math.log(0.5))


def test_approximate_pml():
    p = pmlperm.profile_of_string("aab")
    r = pmlperm.approximate_pml(p)
    assert r.converged
    assert r.probability_exact
    assert sum(r.distribution) == pytest.approx(1.0, abs=1e-12)
    assert r.params["n"] == 3
    _, oracle = pmlperm.exact_pml_oracle(p)
    assert r.log_profile_probability >= math.log(0.25) + oracle
    doc = json.loads(r.to_json())
    assert doc["params"]["k"] == 2
    assert "trace" in json.loads(r.to_json(trace=True))


def test_errors_map_to_value_errors():
    with pytest.raises(pmlperm.InvalidArgument):
        pmlperm.approximate_pml(pmlperm.profile_of_string("ab"), gamma=0.0)
    with pytest.raises(pmlperm.SizeLimitError):
        pmlperm.permanent(np.ones((25, 25)))
    with pytest.raises(ValueError):
        pmlperm.estimate_property([0.5, 0.5], "variance")


def test_properties():
    assert pmlperm.estimate_property([0.25] * 4, "entropy") == pytest.approx(math.log(4.0))
    assert pmlperm.estimate_property([0.5, 0.5], "support_coverage", 2) == pytest.approx(1.5)


def test_cli_entry():
    code, out, _ = pmlperm.run_cli(["bench", "--task", "perm", "--max-n", "2"])
    assert code == 0
    assert out.splitlines()[0] == "task,size,seconds,value"
    code, _, err = pmlperm.run_cli(["sample", "missing.json", "--n", "0", "--seed", "1"])
    assert code == 2
    assert err
