import hashlib
import json
from pathlib import Path

from gazefovea.cli import main
from gazefovea.dataset import read_jsonl


def tree_digest(root: Path) -> dict[str, str]:
    return {
        str(p.relative_to(root)): hashlib.sha256(p.read_bytes()).hexdigest()
        for p in sorted(root.rglob("*"))
        if p.is_file()
    }


def write_answers(path: Path, ids, text_for):
    rows = [{"sample_id": sid, "answer_text": text_for(sid)} for sid in ids]
    path.write_text("\n".join(json.dumps(r) for r in rows) + "\n")


# --- exit codes and usage ----------------------------------------------------

def test_unknown_command_is_a_usage_error(capsys):
    assert main(["frobnicate"]) == 1


def test_missing_required_flag_is_a_usage_error(capsys):
    assert main(["heatmap", "--sample-id", "x"]) == 1


def test_sweep_without_rho_is_a_usage_error(manifest_factory, tmp_path, capsys):
    path = manifest_factory([{}])
    code = main(["sweep", "--manifest", str(path), "--out", str(tmp_path / "o")])
    assert code == 1
    assert "--rho" in capsys.readouterr().err


def test_rho_outside_unit_interval_is_a_usage_error(manifest_factory, tmp_path):
    path = manifest_factory([{}])
    args = ["prepare", "--manifest", str(path), "--out", str(tmp_path / "o")]
    assert main(args + ["--rho", "1.5"]) == 1
    assert main(args + ["--rho", "0"]) == 1


def test_bad_min_crop_is_a_usage_error(manifest_factory, tmp_path):
    path = manifest_factory([{}])
    code = main([
        "prepare", "--manifest", str(path), "--out", str(tmp_path / "o"),
        "--min-crop", "fiftysix",
    ])
    assert code == 1


def test_missing_manifest_file_is_fatal(tmp_path, capsys):
    code = main([
        "prepare", "--manifest", str(tmp_path / "nope.jsonl"), "--out", str(tmp_path / "o"),
    ])
    assert code == 3


# --- heatmap ------------------------------------------------------------------

def test_heatmap_command_writes_both_exports(manifest_factory, tmp_path, capsys):
    path = manifest_factory([{"sample_id": "hm0"}])
    out = tmp_path / "hm"
    assert main(["heatmap", "--manifest", str(path), "--out", str(out),
                 "--sample-id", "hm0"]) == 0
    assert (out / "hm0.gzhm").exists()
    assert (out / "hm0.png").exists()


def test_heatmap_command_rerun_is_byte_identical(manifest_factory, tmp_path, capsys):
    path = manifest_factory([{"sample_id": "hm0"}])
    out = tmp_path / "hm"
    main(["heatmap", "--manifest", str(path), "--out", str(out), "--sample-id", "hm0"])
    first = (out / "hm0.gzhm").read_bytes()
    main(["heatmap", "--manifest", str(path), "--out", str(out), "--sample-id", "hm0"])
    assert (out / "hm0.gzhm").read_bytes() == first


def test_heatmap_unknown_sample_is_fatal(manifest_factory, tmp_path, capsys):
    path = manifest_factory([{}])
    code = main(["heatmap", "--manifest", str(path), "--out", str(tmp_path / "o"),
                 "--sample-id", "ghost"])
    assert code == 3
    assert "ghost" in capsys.readouterr().err


# --- prepare -------------------------------------------------------------------

def test_prepare_emits_bundles_and_rows(manifest_factory, tmp_path, capsys):
    path = manifest_factory([{}, {}, {}])
    out = tmp_path / "prep"
    code = main(["prepare", "--manifest", str(path), "--out", str(out),
                 "--rho", "0.3", "--mode", "two_scale"])
    assert code == 0
    rows = read_jsonl(out / "results.jsonl")
    assert len(rows) == 3
    assert all((out / r["sample_id"] / "roi.png").exists() for r in rows)
    assert all((out / r["sample_id"] / "global.png").exists() for r in rows)
    assert all(r["mode"] == "two_scale" and r["rho"] == 0.3 for r in rows)
    assert read_jsonl(out / "skips.jsonl") == []


def test_prepare_baseline_mode_costs_64_visual_tokens(manifest_factory, tmp_path, capsys):
    path = manifest_factory([{}, {}])
    out = tmp_path / "base"
    assert main(["prepare", "--manifest", str(path), "--out", str(out),
                 "--mode", "baseline"]) == 0
    rows = read_jsonl(out / "results.jsonl")
    assert [r["visual_tokens"] for r in rows] == [64, 64]
    assert [r["total_tokens"] for r in rows] == [100, 100]
    assert all(not (out / r["sample_id"] / "global.png").exists() for r in rows)


def test_prepare_skips_corrupt_images_and_exits_2(manifest_factory, tmp_path, capsys):
    path = manifest_factory([{}, {"sample_id": "bad"}, {}])
    # readable header, truncated body: passes manifest validation, fails decode
    bad = path.parent / "images" / "bad.png"
    bad.write_bytes(bad.read_bytes()[:64])
    out = tmp_path / "prep"
    code = main(["prepare", "--manifest", str(path), "--out", str(out), "--rho", "0.3"])
    assert code == 2
    rows = read_jsonl(out / "results.jsonl")
    skips = read_jsonl(out / "skips.jsonl")
    assert len(rows) == 2
    assert [s["sample_id"] for s in skips] == ["bad"]
    assert "bad" in capsys.readouterr().err


def test_prepare_jobs_do_not_change_outputs(manifest_factory, tmp_path, capsys):
    path = manifest_factory([{} for _ in range(4)])
    outs = []
    for label, jobs in (("serial", "1"), ("parallel", "4")):
        out = tmp_path / label
        assert main(["prepare", "--manifest", str(path), "--out", str(out),
                     "--rho", "0.3", "--jobs", jobs]) == 0
        digest = tree_digest(out)
        digest.pop("effective_config.json")  # echo differs only via jobs-independent keys
        outs.append(digest)
    assert outs[0] == outs[1]


def test_effective_config_echo_omits_the_out_dir(manifest_factory, tmp_path, capsys):
    path = manifest_factory([{}])
    out = tmp_path / "prep"
    main(["prepare", "--manifest", str(path), "--out", str(out), "--rho", "0.3",
          "--seed", "5"])
    echo = json.loads((out / "effective_config.json").read_text())
    assert echo["seed"] == 5
    assert echo["rhos"] == [0.3]
    assert "out" not in echo and "out_dir" not in echo
    assert str(out) not in (out / "effective_config.json").read_text()


# --- sweep ----------------------------------------------------------------------

def test_sweep_single_rho_has_one_data_row(manifest_factory, tmp_path, capsys):
    path = manifest_factory([{}, {}])
    out = tmp_path / "sweep"
    assert main(["sweep", "--manifest", str(path), "--out", str(out),
                 "--rho", "0.3"]) == 0
    lines = (out / "sweep.csv").read_text().splitlines()
    assert len(lines) == 3  # header + baseline + one rho row
    assert lines[1].startswith("baseline,")
    assert lines[2].startswith("rho-0.3,0.3,")


def test_sweep_baseline_mode_is_rejected(manifest_factory, tmp_path, capsys):
    path = manifest_factory([{}])
    code = main(["sweep", "--manifest", str(path), "--out", str(tmp_path / "o"),
                 "--rho", "0.3", "--mode", "baseline"])
    assert code == 1


# --- score ------------------------------------------------------------------------

def test_score_writes_summary_and_breakdown(manifest_factory, tmp_path, capsys):
    path = manifest_factory([{} for _ in range(4)])
    ids = [f"s{i:02d}" for i in range(4)]
    write_answers(tmp_path / "a.jsonl", ids, lambda sid: f"answer about {sid}")
    write_answers(tmp_path / "b.jsonl", ids, lambda sid: f"other text {sid}")
    out = tmp_path / "score"
    code = main(["score", "--manifest", str(path),
                 "--answers-a", str(tmp_path / "a.jsonl"),
                 "--answers-b", str(tmp_path / "b.jsonl"),
                 "--out", str(out), "--seed", "3"])
    assert code == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["wins"] + summary["ties"] + summary["losses"] == 4
    verdict_rows = read_jsonl(out / "verdicts.jsonl")
    assert [r["sample_id"] for r in verdict_rows] == ids
    breakdown = (out / "breakdown.csv").read_text().splitlines()
    assert breakdown[0] == "sample_id,verdict,total_score_a,total_score_b"
    assert len(breakdown) == 5
    assert (out / "judge_audit.jsonl").read_text().count('"order": "ab"') == 4


def test_score_rerun_is_deterministic(manifest_factory, tmp_path, capsys):
    path = manifest_factory([{} for _ in range(3)])
    ids = [f"s{i:02d}" for i in range(3)]
    write_answers(tmp_path / "a.jsonl", ids, lambda sid: f"first {sid}")
    write_answers(tmp_path / "b.jsonl", ids, lambda sid: f"second {sid}")
    digests = []
    for run in ("r1", "r2"):
        out = tmp_path / run
        main(["score", "--manifest", str(path),
              "--answers-a", str(tmp_path / "a.jsonl"),
              "--answers-b", str(tmp_path / "b.jsonl"),
              "--out", str(out), "--seed", "11"])
        digests.append(tree_digest(out))
    assert digests[0] == digests[1]


def test_score_reports_unpaired_ids_and_exits_2(manifest_factory, tmp_path, capsys):
    path = manifest_factory([{}, {}])
    write_answers(tmp_path / "a.jsonl", ["s00", "s01", "extra"], lambda s: f"a {s}")
    write_answers(tmp_path / "b.jsonl", ["s00"], lambda s: f"b {s}")
    out = tmp_path / "score"
    code = main(["score", "--manifest", str(path),
                 "--answers-a", str(tmp_path / "a.jsonl"),
                 "--answers-b", str(tmp_path / "b.jsonl"),
                 "--out", str(out)])
    assert code == 2
    err = capsys.readouterr().err
    assert "unpaired sample_id s01" in err
    assert "unpaired sample_id extra" in err
    summary = json.loads((out / "summary.json").read_text())
    assert summary["unpaired_sample_ids"] == ["extra", "s01"]
    assert summary["n_scored"] == 1


# --- report ------------------------------------------------------------------------

def run_sweep_and_score(manifest_factory, tmp_path):
    path = manifest_factory([{} for _ in range(3)])
    sweep_out = tmp_path / "sweep"
    main(["sweep", "--manifest", str(path), "--out", str(sweep_out),
          "--rho", "0.1", "--rho", "0.4"])
    ids = [f"s{i:02d}" for i in range(3)]
    write_answers(tmp_path / "a.jsonl", ids, lambda s: f"roi answer {s}")
    write_answers(tmp_path / "b.jsonl", ids, lambda s: f"full answer {s}")
    score_out = tmp_path / "score"
    main(["score", "--manifest", str(path),
          "--answers-a", str(tmp_path / "a.jsonl"),
          "--answers-b", str(tmp_path / "b.jsonl"), "--out", str(score_out)])
    return sweep_out, score_out


def test_report_combines_sweep_and_score(manifest_factory, tmp_path, capsys):
    sweep_out, score_out = run_sweep_and_score(manifest_factory, tmp_path)
    report = tmp_path / "report.md"
    assert main(["report", "--sweep", str(sweep_out), "--score", str(score_out),
                 "--out", str(report)]) == 0
    text = report.read_text()
    assert "| baseline |" in text
    assert "win rate (ties excluded)" in text


def test_report_without_scores_states_the_omission(manifest_factory, tmp_path, capsys):
    sweep_out, _ = run_sweep_and_score(manifest_factory, tmp_path)
    report = tmp_path / "report.md"
    assert main(["report", "--sweep", str(sweep_out), "--out", str(report)]) == 0
    assert "cost columns only" in report.read_text()


def test_report_rerun_is_byte_identical(manifest_factory, tmp_path, capsys):
    sweep_out, score_out = run_sweep_and_score(manifest_factory, tmp_path)
    args = ["report", "--sweep", str(sweep_out), "--score", str(score_out)]
    main(args + ["--out", str(tmp_path / "r1.md")])
    main(args + ["--out", str(tmp_path / "r2.md")])
    assert (tmp_path / "r1.md").read_bytes() == (tmp_path / "r2.md").read_bytes()


# --- config file precedence -----------------------------------------------------------

def test_config_file_supplies_defaults(manifest_factory, tmp_path, capsys):
    path = manifest_factory([{}])
    out = tmp_path / "prep"
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({
        "manifest": str(path), "out": str(out), "rho": [0.2], "mode": "roi_only",
        "seed": 9,
    }))
    assert main(["prepare", "--config", str(cfg)]) == 0
    echo = json.loads((out / "effective_config.json").read_text())
    assert echo["mode"] == "roi_only"
    assert echo["rhos"] == [0.2]
    assert echo["seed"] == 9


def test_cli_flags_override_the_config_file(manifest_factory, tmp_path, capsys):
    path = manifest_factory([{}])
    out = tmp_path / "prep"
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({
        "manifest": str(path), "out": str(out), "rho": [0.2], "mode": "roi_only",
    }))
    assert main(["prepare", "--config", str(cfg), "--mode", "two_scale",
                 "--rho", "0.5"]) == 0
    echo = json.loads((out / "effective_config.json").read_text())
    assert echo["mode"] == "two_scale"
    assert echo["rhos"] == [0.5]
