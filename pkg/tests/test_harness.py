import json
import os
import shutil

import pytest

from stagekit.harness import (FuzzSpec, diff_one, diff_seed, gen_program,
                              gen_program_with_params, run_corpus)
from stagekit.syntax import parse_module
from stagekit.transforms import convert
from helpers import CORPUS, corpus_source


def test_degenerate_spec_returns_literal():
    source = gen_program(FuzzSpec(seed=1, max_stmts=0))
    assert source.startswith("def main(")
    assert "return" in source
    module = parse_module(source, "t.msl")
    convert(module)


def test_determinism():
    spec = FuzzSpec(seed=123)
    assert gen_program(spec) == gen_program(spec)


def test_parse_and_convert_sweep():
    for seed in range(150):
        source = gen_program(FuzzSpec(seed=seed))
        module = parse_module(source, f"seed{seed}.msl")
        convert(module)


def test_feature_mask_respected():
    spec = FuzzSpec(seed=7, feature_mask=frozenset({"if"}))
    for seed in range(30):
        source = gen_program(FuzzSpec(seed=seed, feature_mask=frozenset({"if"})))
        assert "while" not in source
        assert "for " not in source


def test_diff_continue_sum_matches():
    source = corpus_source("continue_sum.msl")
    report = diff_one(source, [], mode="concrete")
    assert report.ok, report.detail
    assert report.native == [4]


def test_diff_error_parity():
    source = "def main(a):\n    return 1.0 / (a - a)\n"
    report = diff_one(source, [3.0], mode="staged_params")
    assert report.ok, (report.verdict, report.detail)
    assert "DivisionByZero" in report.detail


def test_diff_seed_replayable():
    first = diff_seed(17)
    second = diff_seed(17)
    assert [r.verdict for r in first] == [r.verdict for r in second]
    assert [r.program for r in first] == [r.program for r in second]


def test_diff_small_sweep():
    for seed in range(30):
        for report in diff_seed(seed):
            assert report.ok, f"{report.detail}\n{report.program}"


def test_corpus_empty_dir(tmp_path):
    summary = run_corpus(str(tmp_path))
    assert summary.ok and summary.total == 0


def test_corpus_full():
    summary = run_corpus(CORPUS)
    assert summary.total >= 8
    assert summary.ok, summary.failures


def test_corpus_tampered_golden(tmp_path):
    target = tmp_path / "corpus"
    shutil.copytree(CORPUS, target)
    golden = target / "golden" / "while_halve.sexpr"
    golden.write_text(golden.read_text() + "(tampered)\n")
    summary = run_corpus(str(target))
    assert not summary.ok
    assert any("while_halve.sexpr" in failure for failure in summary.failures)


def test_diff_sweep_sexpr_backend():
    from stagekit.harness.fuzz import gen_inputs, gen_program_with_params
    for seed in range(25):
        source, kinds = gen_program_with_params(FuzzSpec(seed=seed))
        inputs = gen_inputs(kinds, seed * 77)
        report = diff_one(source, inputs, "staged_params", backend="sexpr")
        assert report.ok, f"{report.detail}\n{report.program}"
