import subprocess
import sys

import pytest

from arceager.cli import UsageError, main, parse_command, train_config
from arceager.conll import read_conll, write_conll
from arceager.learning import UpdateStrategy
from arceager.oracles import OracleMode
from arceager.transition import RootMode
from conftest import SAMPLE
from worked import PARTIAL_HEADS, partial_sentence

SPECIFIC = ("train -train-file data/train.conll -dev data/dev.conll -model model/train.model "
            "-punc punc_files/my_lang.puncs -cluster data/cluster.path beam:16 iter:10 "
            "unlabeled lowercase static early nt:4 root_first").split()


def test_specific_options_map_to_config():
    spec = parse_command(SPECIFIC)
    assert spec.flags["-cluster"] == "data/cluster.path"
    cfg = train_config(spec)
    assert (cfg.beam_width, cfg.iterations, cfg.threads) == (16, 10, 4)
    assert not cfg.labeled and cfg.lowercase
    assert cfg.oracle == OracleMode.STATIC and cfg.update == UpdateStrategy.EARLY
    assert cfg.root == RootMode.INITIAL


def test_defaults():
    cfg = train_config(parse_command("train -train-file a -model m".split()))
    assert (cfg.beam_width, cfg.iterations, cfg.threads) == (64, 20, 8)
    assert cfg.labeled and not cfg.basic and not cfg.lowercase
    assert cfg.oracle == OracleMode.DYNAMIC_MAX_SCORING
    assert cfg.update == UpdateStrategy.MAX_VIOLATION and cfg.root == RootMode.FINAL


@pytest.mark.parametrize("line", [
    "train -train-file T -dev D -model M -punc P",
    "train -train-file T -dev D -model M -punc P -cluster C",
    "train -train-file T -dev D -model M -punc P beam:1 basic",
    "train -train-file T -dev D -model M -punc P iter:10",
    "parse_conll -input I -out O -model M",
    "parse_tagged -input I -out O -model M",
    "parse_tagged -input I -out O -model M -delim /",
    "eval -gold G -parse P -punc P",
    "parse_partial -input I -out O -model M",
    "train random -model M -train-file T",
])
def test_documented_command_lines_parse(line):
    parse_command(line.split())


@pytest.mark.parametrize("line", [
    "train -train-file T -model M beam:0",
    "train -train-file T -model M iter:x",
    "train -train-file T -model M fancy",
    "train -train-file T -model M -model N",
    "train -train-file T -model M early early",
    "train -train-file T",
    "parse_conll -input I -out O -model M unlabeled",
    "frobnicate",
    "",
])
def test_usage_errors(line):
    with pytest.raises(UsageError):
        parse_command(line.split())


def test_usage_error_exit_code(capsys):
    assert main(["train", "-train-file", "x", "-model", "m", "beam:0"]) == 1
    assert "usage error" in capsys.readouterr().err


def test_missing_input_is_data_error(tmp_path, capsys):
    assert main(["eval", "-gold", str(tmp_path / "no"), "-parse", str(tmp_path / "no")]) == 2
    assert main(["parse_conll", "-input", str(SAMPLE / "dev.conll"), "-out",
                 str(tmp_path / "o"), "-model", str(tmp_path / "none")]) == 2


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    train_file = d / "train.conll"
    with open(SAMPLE / "train.conll") as f:
        sents = read_conll(f)[:40]
    with open(train_file, "w") as f:
        write_conll(sents, f)
    code = main(["train", "-train-file", str(train_file), "-model", str(d / "m"),
                 "beam:2", "iter:2", "nt:1"])
    assert code == 0
    return d


def test_train_without_dev_writes_iteration_models(trained, capsys):
    assert (trained / "m_iter1").exists() and (trained / "m_iter2").exists()


def test_train_log_lines(tmp_path, capsys):
    d = tmp_path
    with open(SAMPLE / "train.conll") as f:
        sents = read_conll(f)[:15]
    with open(d / "t.conll", "w") as f:
        write_conll(sents, f)
    assert main(["train", "-train-file", str(d / "t.conll"), "-dev", str(d / "t.conll"),
                 "-model", str(d / "m"), "beam:1", "iter:2", "nt:2"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert [l.split("\t")[:2] for l in lines[:2]] == [["iter", "1"], ["iter", "2"]]
    assert lines[0].split("\t")[6] == "dev_uas"
    assert lines[-1] == "skipped\t0"


def test_parse_conll_ignores_gold_heads(trained, tmp_path):
    model = str(trained / "m_iter2")
    with open(SAMPLE / "dev.conll") as f:
        dev = read_conll(f)[:20]
    gold_in, blind_in = tmp_path / "gold.conll", tmp_path / "blind.conll"
    with open(gold_in, "w") as f:
        write_conll(dev, f)
    with open(blind_in, "w") as f:
        for s in dev:
            for t in s:
                f.write(f"{t.index}\t{t.form}\t_\t{t.pos}\t{t.pos}\t_\t_\t_\t_\t_\n")
            f.write("\n")
    for src, dst in ((gold_in, "a"), (blind_in, "b")):
        assert main(["parse_conll", "-input", str(src), "-out", str(tmp_path / dst),
                     "-model", model, "nt:2", "-score", str(tmp_path / (dst + ".score"))]) == 0
    assert (tmp_path / "a").read_text() == (tmp_path / "b").read_text()
    assert len((tmp_path / "a.score").read_text().splitlines()) == 20


def test_parse_tagged_with_delimiter(trained, tmp_path):
    src = tmp_path / "in.txt"
    src.write_text("I/PRP want/VBP\n")
    out = tmp_path / "out.conll"
    assert main(["parse_tagged", "-input", str(src), "-out", str(out),
                 "-model", str(trained / "m_iter2"), "-delim", "/"]) == 0
    [s] = read_conll(open(out))
    assert s.forms == ["I", "want"] and s.tags == ["PRP", "VBP"]
    assert None not in s.heads


def test_parse_tagged_bad_line(trained, tmp_path, capsys):
    src = tmp_path / "in.txt"
    src.write_text("I_PRP\nbroken\n")
    assert main(["parse_tagged", "-input", str(src), "-out", str(tmp_path / "o"),
                 "-model", str(trained / "m_iter2")]) == 2
    assert "line 2" in capsys.readouterr().err


def test_parse_partial_keeps_arcs(trained, tmp_path):
    src = tmp_path / "partial.conll"
    with open(src, "w") as f:
        write_conll([partial_sentence()], f)
    out = tmp_path / "out.conll"
    assert main(["parse_partial", "-input", str(src), "-out", str(out),
                 "-model", str(trained / "m_iter2")]) == 0
    [s] = read_conll(open(out))
    for d, h in enumerate(PARTIAL_HEADS, 1):
        if h >= 0:
            assert s.heads[d - 1] == h


def test_eval_gold_against_itself(capsys):
    gold = str(SAMPLE / "dev.conll")
    assert main(["eval", "-gold", gold, "-parse", gold]) == 0
    assert capsys.readouterr().out.startswith("UAS: 100.00\tLAS: 100.00")


def test_eval_uses_custom_punctuation(tmp_path, capsys):
    gold = str(SAMPLE / "dev.conll")
    punc = tmp_path / "none.puncs"
    punc.write_text("")
    assert main(["eval", "-gold", gold, "-parse", gold, "-punc", str(punc)]) == 0
    assert "excluded: 0" in capsys.readouterr().out


def test_eval_misaligned(tmp_path, capsys):
    gold = str(SAMPLE / "dev.conll")
    assert main(["eval", "-gold", gold, "-parse", str(SAMPLE / "train.conll")]) == 2
    assert "error" in capsys.readouterr().err


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "arceager", "eval"], capture_output=True,
                       text=True)
    assert r.returncode == 1 and "requires -gold" in r.stderr


def test_eval_defaults_to_wsj_punctuation(capsys):
    from arceager.conll import default_punctuation
    from arceager.evaluation import evaluate
    gold = read_conll(open(SAMPLE / "dev.conll"))
    expected = evaluate(gold, gold, default_punctuation()).format()
    assert main(["eval", "-gold", str(SAMPLE / "dev.conll"),
                 "-parse", str(SAMPLE / "dev.conll")]) == 0
    out = capsys.readouterr().out.strip()
    assert out == expected and "excluded: 0" not in out
