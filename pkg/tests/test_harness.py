import logging

import numpy as np
import pytest

from hyperaug import cli
from hyperaug.errors import ConfigError
from hyperaug.harness import (ABLATION_HEADER, MATRIX_HEADER, ExperimentConfig,
                              LeakageRecord, ablation_hyper_only,
                              audit_leakage, config_from_dict, load_config,
                              run_matrix, sweep_amount, write_matrix_csv)

from corpus import SyntheticCorpus


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    return SyntheticCorpus(tmp_path_factory.mktemp("corpus"), n_base=40,
                           dim=8, seed=11)


def lr_config(corpus, out_dir, **overrides):
    base = corpus.config_dict(out_dir, classifier="lr", folds=4, **overrides)
    return config_from_dict(base)


class TestConfig:
    def test_yaml_round_trip(self, corpus, tmp_path):
        path = corpus.write_config(tmp_path / "cfg.yaml", tmp_path / "out",
                                   classifier="lr")
        cfg = load_config(path)
        assert cfg.classifier == "lr"
        assert cfg.ff_spec.hidden_sizes == (8, 8, 8)
        assert cfg.dataset_paths == {"synth": corpus.pairs_path}
        assert cfg.train.batch_size == 32

    def test_unknown_key_rejected(self, corpus, tmp_path):
        with pytest.raises(ConfigError):
            config_from_dict(corpus.config_dict(tmp_path, typo_key=1))

    def test_missing_space_path(self):
        with pytest.raises(ConfigError):
            config_from_dict({"dataset.a": "x.tsv"})

    def test_overrides_win(self, corpus, tmp_path):
        path = corpus.write_config(tmp_path / "cfg.yaml", tmp_path / "out")
        cfg = load_config(path, overrides={"seed": 99, "folds": 3})
        assert cfg.seed == 99
        assert cfg.folds == 3

    def test_hash_stable_and_sensitive(self, corpus, tmp_path):
        a = lr_config(corpus, tmp_path)
        b = lr_config(corpus, tmp_path)
        c = lr_config(corpus, tmp_path, seed=1)
        assert a.config_hash() == b.config_hash()
        assert a.config_hash() != c.config_hash()
        assert len(a.config_hash()) == 12

    def test_hash_ignores_output_dir(self, corpus, tmp_path):
        a = lr_config(corpus, tmp_path / "x")
        b = lr_config(corpus, tmp_path / "y")
        assert a.config_hash() == b.config_hash()

    def test_compose_requires_compounds(self, corpus, tmp_path):
        flat = corpus.config_dict(tmp_path, augmentations="compose")
        flat["compounds_path"] = None
        with pytest.raises(ConfigError):
            config_from_dict(flat)

    def test_unknown_condition_rejected(self, corpus, tmp_path):
        with pytest.raises(ConfigError):
            config_from_dict(corpus.config_dict(tmp_path, augmentations="bogus"))


class TestAuditLeakage:
    def test_disjoint_is_clean(self):
        rec = LeakageRecord("d", "compose", 0,
                            added_token_sets=[frozenset({"a", "b"})],
                            eval_tokens={"c", "d"})
        assert audit_leakage([rec]) == 0

    def test_counts_each_overlapping_example(self):
        rec = LeakageRecord("d", "compose", 0,
                            added_token_sets=[frozenset({"a"}),
                                              frozenset({"c"}),
                                              frozenset({"c", "d"})],
                            eval_tokens={"c"})
        assert audit_leakage([rec]) == 2

    def test_empty_records(self):
        assert audit_leakage([]) == 0


class TestRunMatrix:
    def test_baseline_only(self, corpus, tmp_path):
        result = run_matrix(lr_config(corpus, tmp_path))
        assert len(result.rows) == 1
        row = result.rows[0]
        assert row.augmentation == "none"
        assert row.amount == 0
        assert row.delta_vs_baseline == 0.0
        assert 0.0 <= row.accuracy <= 1.0
        assert result.audit_violations() == 0

    def test_delta_arithmetic(self, corpus, tmp_path):
        cfg = lr_config(corpus, tmp_path, augmentations="compose",
                        augmentation_amount=10)
        result = run_matrix(cfg)
        by_cond = {r.augmentation: r for r in result.rows}
        assert set(by_cond) == {"none", "compose"}
        baseline = by_cond["none"].accuracy
        assert by_cond["compose"].delta_vs_baseline == pytest.approx(
            by_cond["compose"].accuracy - baseline)
        assert result.audit_violations() == 0

    def test_all_conditions_run_clean(self, corpus, tmp_path):
        cfg = lr_config(corpus, tmp_path,
                        augmentations="compose,gandalf,extension",
                        augmentation_amount=10,
                        **{"gan.steps": 20, "gan.batch_size": 8,
                           "extension.strategy": "closure_positives",
                           "extension.max_pairs": 10})
        result = run_matrix(cfg)
        assert [r.augmentation for r in result.rows] == [
            "none", "compose", "gandalf", "extension"]
        assert result.audit_violations() == 0

    def test_byte_identical_reruns_and_parallel(self, corpus, tmp_path):
        paths = [tmp_path / f"m{i}.csv" for i in range(3)]
        for i, path in enumerate(paths):
            workers = 2 if i == 2 else 1
            cfg = lr_config(corpus, tmp_path, augmentations="compose",
                            augmentation_amount=10, workers=workers)
            run_matrix(cfg, out_path=path)
        blobs = [p.read_bytes() for p in paths]
        assert blobs[0] == blobs[1] == blobs[2]

    def test_csv_format(self, corpus, tmp_path):
        cfg = lr_config(corpus, tmp_path)
        out = tmp_path / "matrix.csv"
        result = run_matrix(cfg, out_path=out)
        lines = out.read_text().splitlines()
        assert lines[0] == ",".join(MATRIX_HEADER)
        fields = lines[1].split(",")
        assert fields[0] == "synth"
        assert fields[-1] == result.config_hash

    def test_clamp_warning_on_huge_amount(self, corpus, tmp_path, caplog):
        cfg = lr_config(corpus, tmp_path, augmentations="compose",
                        augmentation_amount=10 ** 6)
        with caplog.at_level(logging.WARNING, logger="hyperaug.harness"):
            run_matrix(cfg)
        assert any("clamped" in rec.message for rec in caplog.records)


class TestSweepAmount:
    def test_rows_per_amount_with_baseline_delta(self, corpus, tmp_path):
        cfg = lr_config(corpus, tmp_path, augmentations="compose")
        result = sweep_amount(cfg, [0, 5, 10])
        assert [r.amount for r in result.rows] == [0, 5, 10]
        baseline = result.rows[0].accuracy
        for row in result.rows:
            assert row.delta_vs_baseline == pytest.approx(row.accuracy - baseline)
        assert result.rows[0].augmentation == "none"
        assert result.audit_violations() == 0

    def test_unsorted_amounts_rejected(self, corpus, tmp_path):
        cfg = lr_config(corpus, tmp_path, augmentations="compose")
        with pytest.raises(ConfigError):
            sweep_amount(cfg, [10, 0, 5])

    def test_zero_required(self, corpus, tmp_path):
        cfg = lr_config(corpus, tmp_path, augmentations="compose")
        with pytest.raises(ConfigError):
            sweep_amount(cfg, [5, 10])

    def test_repeat_amount_matches_matrix_cell(self, corpus, tmp_path):
        # the sweep at amount A and a matrix run at amount A see the same
        # nested candidate prefix, so their accuracies agree exactly
        cfg = lr_config(corpus, tmp_path, augmentations="compose",
                        augmentation_amount=10)
        sweep = sweep_amount(cfg, [0, 10])
        matrix = run_matrix(cfg)
        sweep_acc = {r.amount: r.accuracy for r in sweep.rows}
        matrix_acc = {r.amount: r.accuracy for r in matrix.rows}
        assert sweep_acc == matrix_acc


class TestAblation:
    def test_variants_and_conditions(self, corpus, tmp_path):
        cfg = lr_config(corpus, tmp_path, augmentations="compose",
                        augmentation_amount=10)
        result = ablation_hyper_only(cfg)
        cells = {(r["variant"], r["augmentation"]) for r in result.rows}
        assert cells == {("full", "none"), ("full", "compose"),
                         ("hyper_only", "none"), ("hyper_only", "compose")}
        assert result.audit_violations() == 0

    def test_hyper_only_near_chance_on_shared_hypernyms(self, tmp_path):
        # every hypernym token appears once positively and once negatively,
        # so hypernym-only features carry no label signal
        rng = np.random.default_rng(3)
        n, d = 30, 6
        tokens, rows, lines = [], [], []
        for i in range(n):
            tokens += [f"a{i}", f"b{i}", f"h{i}"]
            rows += list(rng.standard_normal((3, d)))
            lines.append(f"a{i}\th{i}\t1")
            lines.append(f"b{i}\th{i}\t0")
        space_path = tmp_path / "space.txt"
        with open(space_path, "w") as fh:
            fh.write(f"{len(tokens)} {d}\n")
            for tok, vec in zip(tokens, rows):
                fh.write(tok + " " + " ".join(repr(float(v)) for v in vec) + "\n")
        pairs_path = tmp_path / "pairs.tsv"
        pairs_path.write_text("\n".join(lines) + "\n")
        cfg = ExperimentConfig(space_path=str(space_path),
                               dataset_paths={"null": str(pairs_path)},
                               classifier="lr", folds=3, seed=0,
                               output_dir=str(tmp_path))
        result = ablation_hyper_only(cfg)
        hyper_rows = [r for r in result.rows if r["variant"] == "hyper_only"]
        assert all(0.25 <= r["accuracy"] <= 0.75 for r in hyper_rows)

    def test_csv_export(self, corpus, tmp_path):
        cfg = lr_config(corpus, tmp_path)
        out = tmp_path / "ablation.csv"
        result = ablation_hyper_only(cfg, out_path=out)
        lines = out.read_text().splitlines()
        assert lines[0] == ",".join(ABLATION_HEADER)
        assert len(lines) == 1 + len(result.rows)


class TestMatrixCsvWriter:
    def test_six_decimal_accuracy(self, tmp_path):
        from hyperaug.harness import ResultRow
        row = ResultRow(dataset="d", space="s", classifier="lr",
                        augmentation="none", amount=0,
                        accuracy=1 / 3, delta_vs_baseline=0.0, seed=0)
        path = tmp_path / "m.csv"
        write_matrix_csv([row], path, "abc")
        assert "0.333333" in path.read_text()


class TestCli:
    def test_run_matrix_exit_zero(self, corpus, tmp_path, capsys):
        cfg_path = corpus.write_config(tmp_path / "cfg.yaml", tmp_path / "out",
                                       classifier="lr", folds=3)
        rc = cli.main(["run-matrix", "--config", str(cfg_path)])
        assert rc == 0
        assert (tmp_path / "out" / "matrix.csv").exists()
        assert "wrote" in capsys.readouterr().out

    def test_set_override_changes_output_dir(self, corpus, tmp_path):
        cfg_path = corpus.write_config(tmp_path / "cfg.yaml", tmp_path / "out",
                                       classifier="lr", folds=3)
        rc = cli.main(["run-matrix", "--config", str(cfg_path),
                       "--out", str(tmp_path / "other"),
                       "--set", "folds=2"])
        assert rc == 0
        assert (tmp_path / "other" / "matrix.csv").exists()

    def test_bad_config_errors_with_json_line(self, corpus, tmp_path, capsys):
        cfg_path = corpus.write_config(tmp_path / "cfg.yaml", tmp_path / "out")
        rc = cli.main(["run-matrix", "--config", str(cfg_path),
                       "--set", "nonsense_key=1"])
        assert rc == 1
        err = capsys.readouterr().err.splitlines()
        assert any(line.startswith("ERROR {") for line in err)

    def test_missing_file_errors(self, tmp_path, capsys):
        rc = cli.main(["run-matrix", "--config", str(tmp_path / "nope.yaml")])
        assert rc == 1
        assert "ERROR" in capsys.readouterr().err

    def test_neighbors_subcommand(self, corpus, tmp_path):
        cfg_path = corpus.write_config(tmp_path / "cfg.yaml", tmp_path / "out")
        rc = cli.main(["neighbors", "--config", str(cfg_path), "--k", "3"])
        assert rc == 0
        assert (tmp_path / "out" / "neighbors.csv").exists()

    def test_extend_subcommand(self, corpus, tmp_path):
        cfg_path = corpus.write_config(
            tmp_path / "cfg.yaml", tmp_path / "out",
            **{"extension.strategy": "closure_positives",
               "extension.max_pairs": 10})
        rc = cli.main(["extend", "--config", str(cfg_path)])
        assert rc == 0
        assert (tmp_path / "out" / "synth_extended.tsv").exists()

    def test_augment_compose_subcommand(self, corpus, tmp_path):
        cfg_path = corpus.write_config(tmp_path / "cfg.yaml", tmp_path / "out",
                                       augmentation_amount=10)
        rc = cli.main(["augment-compose", "--config", str(cfg_path)])
        assert rc == 0
        assert (tmp_path / "out" / "compose_pairs.tsv").exists()
        assert (tmp_path / "out" / "compose_vectors.txt").exists()

    def test_figures_rendered_when_enabled(self, corpus, tmp_path):
        cfg_path = corpus.write_config(tmp_path / "cfg.yaml", tmp_path / "out",
                                       classifier="lr", folds=3,
                                       render_figures=True)
        rc = cli.main(["run-matrix", "--config", str(cfg_path)])
        assert rc == 0
        assert (tmp_path / "out" / "matrix.png").stat().st_size > 0
