import json

from circlelab.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_thresholds(capsys):
    code, out, _ = run(capsys, "thresholds", "--k-max", "8")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0].startswith("k,new,bp_2k_k,bhb")
    assert lines[1].startswith("3,20,24,36")
    assert len(lines) == 7


def test_certify_infeasible(capsys):
    code, out, _ = run(capsys, "certify", "--k", "3", "--n", "20")
    assert code == 0
    assert out.startswith("INFEASIBLE") and "kappa > 10" in out and "kappa < 10" in out


def test_certify_json(capsys):
    code, out, _ = run(capsys, "--format", "json", "certify", "--k", "3")
    assert code == 0
    assert json.loads(out)["kappa_interval"] == ["42/5", "21/2"]


def test_gamma_crt(capsys):
    code, out, _ = run(capsys, "gamma", "--spec", "n4", "--q", "6")
    assert code == 0
    assert "True" in out.splitlines()[1]


def test_expsum_columns(capsys):
    code, out, _ = run(capsys, "expsum", "--spec", "n2", "--X", "3", "--alpha-k", "1/3", "--alpha-d", "1/7")
    assert code == 0
    assert out.splitlines()[0] == "X,alpha_k,alpha_d,re,im,abs,envelope,ratio"


def test_weyl_diag(capsys):
    code, out, err = run(capsys, "weyl-diag", "--X", "50,100")
    assert code == 0 and "slope" in err
    assert out.splitlines()[0] == "X,alpha_k,alpha_d,re,im,abs,envelope,ratio"


def test_arcs_volume(capsys):
    code, out, _ = run(capsys, "arcs", "volume", "--X", "10")
    assert code == 0
    assert {"theta", "X", "volume_num", "volume_den", "bound_ratio", "disjoint"} <= set(out.splitlines()[0].split(","))


def test_count_and_budget(capsys):
    assert run(capsys, "count", "--spec", "n4", "--X", "1")[1].splitlines()[1].startswith("1,15")
    code, _, err = run(capsys, "--budget", "10", "count", "--spec", "n4", "--X", "30", "--method", "enumeration")
    assert code == 3 and "budget" in err


def test_usage_errors(capsys, tmp_path):
    code, _, err = run(capsys, "bogus")
    assert code == 2 and "usage" in err
    bad = tmp_path / "bad.json"
    bad.write_text('{"n": 1, "k": 3, "diag": [0], "g_monomials": []}')
    code, _, err = run(capsys, "count", "--spec", str(bad), "--X", "1")
    assert code == 2 and "zero diagonal" in err


def test_small_subcommands(capsys):
    assert run(capsys, "chi-p", "--spec", "n2", "--p", "2")[0] == 0
    assert run(capsys, "sing-series", "--spec", "n2", "--R", "4")[0] == 0
    assert run(capsys, "sing-integral", "--spec", "n2", "--R", "2", "--levels", "1")[0] == 0
    assert run(capsys, "main-term", "--spec", "n2", "--X", "10")[0] == 0
    assert run(capsys, "arcs", "classify", "--X", "100", "--alpha-k", "1/2")[0] == 0
