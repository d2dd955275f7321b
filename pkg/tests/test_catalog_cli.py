import io
import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sct import catalog
from sct.cli import run_cli
from sct.dist import JointDist3, NotNormalized
from sct.fileformat import (DistSyntaxError, format_prob, parse_dist, parse_exact, read_dist,
                            serialize_dist, serialize_table, write_dist)
from sct.gk import ergodic_decomposition
from sct.dist import JointDist2


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run_cli(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def all_refs():
    refs = [(n, None) for n in ["p1", "p2", "p3", "p4", "p5", "psecret"]]
    refs += [("pn", n) for n in (2, 3, 5)] + [("qn", n) for n in (3, 4, 8, 16)]
    return refs


def test_p4_exact_sum():
    sizes, table = catalog.exact_table("p4")
    # 4 + 4 + 2 + 1 + 1 + 1 cells; masses 70 + 60 + 42 + 63 + 35 + 45 over 315
    assert len(table) == 13 and sum(table.values()) == 1
    assert sizes == (3, 6, 3)


def test_q4_q_star_pmf():
    d = catalog.get("qn", 4)
    dec = ergodic_decomposition(JointDist2(d.probs.sum(axis=2)))
    pmf = {dec.components[i][0]: dec.q_star_pmf[i] for i in range(dec.n_components)}
    assert pmf[(0, 1, 2, 3)] == pytest.approx(0.25, abs=1e-15)
    assert pmf[(8,)] == pytest.approx(0.5, abs=1e-15)
    for i in range(4, 8):
        assert pmf[(i,)] == pytest.approx(1 / 16, abs=1e-15)


def test_psecret():
    d = catalog.get("psecret")
    assert d.sizes == (2, 2, 1)
    assert d.probs[0, 0, 0] == d.probs[1, 1, 0] == 0.5


@pytest.mark.parametrize("n", [2, 3, 4, 7])
def test_family_support_sizes(n):
    assert catalog.get("pn", n).support_size == n * n + n
    if n >= 3:
        assert catalog.get("qn", n).support_size == n * n + n + 1


def test_catalog_errors():
    with pytest.raises(catalog.UnknownName):
        catalog.get("p9")
    with pytest.raises(catalog.BadParam):
        catalog.get("qn", 2)
    with pytest.raises(catalog.BadParam):
        catalog.get("pn")
    with pytest.raises(catalog.BadParam):
        catalog.parse_ref("qn:x")


def test_random_is_seeded():
    assert catalog.get("random", 3) == catalog.get("random", 3)
    assert catalog.get("random", 3) != catalog.get("random", 4)


@pytest.mark.parametrize("name,n", all_refs())
def test_round_trip_exact(name, n):
    sizes, table = catalog.exact_table(name, n)
    text = serialize_table(sizes, table, name)
    sizes2, table2, _, name2 = parse_exact(text)
    assert sizes2 == sizes and name2 == name
    assert set(table2) == {k for k, v in table.items() if v != 0}
    for k, v in table.items():
        if isinstance(v, Fraction):
            assert table2[k] == v
        else:
            assert float(table2[k]) == v
    d = catalog.get(name, n)
    assert parse_dist(serialize_dist(d)) == d


def test_p4_rational_entry():
    text = serialize_table(*catalog.exact_table("p4"))
    assert "1/18" in text
    d = parse_dist(text)
    assert d.probs[0, 0, 0] == 1 / 18


def test_file_round_trip(tmp_path):
    d = catalog.get("p5")
    path = tmp_path / "p5.txt"
    write_dist(d, path, name="p5")
    assert read_dist(path) == d


def test_labels_round_trip():
    d = JointDist3(np.full((2, 1, 1), 0.5), labels=(("a", "b"), ("u",), ("e",)))
    assert parse_dist(serialize_dist(d)).labels == d.labels


@pytest.mark.parametrize("text,line", [
    ("alphabets 2 2 1\nentry 0 2 0 1\n", 2),
    ("alphabets 2 2 1\nentry 0 0 0 1/0\n", 2),
    ("entry 0 0 0 1\n", 1),
    ("alphabets 2 2\n", 1),
    ("alphabets 1 1 1\nentry 0 0 0 1\nentry 0 0 0 1\n", 3),
    ("alphabets 1 1 1\nbogus\n", 2),
    ("alphabets 1 1 1\nentry  0 0 0 1\n", 2),
])
def test_syntax_errors(text, line):
    with pytest.raises(SyntaxError) as e:
        parse_exact(text)
    assert e.value.lineno == line


def test_not_normalized():
    with pytest.raises(NotNormalized):
        parse_exact("alphabets 2 1 1\nentry 0 0 0 1/3\nentry 1 0 0 1/3\n")


def test_exact_zero_kept_out_of_support():
    d = parse_dist("alphabets 2 1 1\nentry 0 0 0 1\nentry 1 0 0 0\n")
    assert d.support_size == 1


@given(st.integers(1, 10 ** 6), st.integers(1, 10 ** 6))
def test_format_prob_rational_round_trip(a, b):
    v = Fraction(min(a, b), max(a, b))
    assert Fraction(format_prob(v)) == v


@given(st.floats(0, 1))
def test_format_prob_float_round_trip(x):
    tok = format_prob(x)
    assert float(Fraction(tok)) == pytest.approx(x, abs=1e-15)


def test_cli_compute_line():
    code, out, _ = run("compute", "--quantity", "gk-cond", "--dist", "catalog:p3")
    assert code == 0
    assert out == "quantity=gk_cond dist=catalog:p3 value=1.000000000 exact=true\n"


def test_cli_compute_json():
    code, out, _ = run("compute", "--quantity", "gk", "--dist", "catalog:p3", "--json-lines")
    rec = json.loads(out)
    assert code == 0 and rec["value"] == pytest.approx(1.5) and rec["exact"] is True


def test_cli_file_input(tmp_path):
    path = tmp_path / "d.txt"
    path.write_text(serialize_table(*catalog.exact_table("p2")))
    code, out, _ = run("compute", "--quantity", "gk-cond", "--dist", f"file:{path}")
    assert code == 0 and "value=0.500000000" in out


def test_cli_reproduce_example1_stable():
    a = run("reproduce", "example1")
    b = run("reproduce", "example1")
    assert a == b and a[0] == 0
    rows = {l.split()[0]: l.split()[1] for l in a[1].splitlines()[1:5]}
    assert rows == {"p1": "0.000000000", "p2": "0.500000000", "p3": "1.000000000",
                    "p5": "1.000000000"}


def test_cli_sweep():
    code, out, _ = run("sweep", "qn", "--n", "4", "8", "16")
    vals = [l.split()[1] for l in out.splitlines()[1:4]]
    assert code == 0 and vals == ["0.500000000", "0.333333333", "0.250000000"]


def test_cli_catalog_listing():
    code, out, _ = run("catalog")
    assert code == 0 and "psecret" in out and "random" in out
    code, out, _ = run("catalog", "p4")
    assert code == 0 and "entry 0 0 0 1/18" in out


def test_cli_errors():
    code, _, err = run("compute", "--quantity", "gk", "--dist", "catalog:nope")
    assert code == 1 and "nope" in err
    code, _, err = run("compute", "--quantity", "gk", "--dist", "bad")
    assert code == 2
    code, _, err = run("compute", "--quantity", "nonsense", "--dist", "catalog:p1")
    assert code == 2 and "invalid choice" in err


def test_cli_audit_small():
    code, out, _ = run("audit", "--measure", "gk_cond", "--trials", "12", "--dist", "catalog:p5")
    assert code == 0 and "violations=0" in out
