"""Sidecar schema conformance.

Checks that the committed fixture sidecars validate, that every file the engine
writes validates, that the engine accepts schema-valid rows it did not write
itself, and that the schemas reject the rows the engine rejects.

usage: validate_sidecars.py <relight-cli> <schemas-dir> <fixture-dir>
"""

import json
import shutil
import subprocess
import sys
import tempfile
import unittest
from pathlib import Path

import jsonschema

CLI, SCHEMAS, FIXTURE = (Path(a) for a in sys.argv[1:4])
del sys.argv[1:4]


def schema(name):
    s = json.loads((SCHEMAS / f"{name}.schema.json").read_text())
    jsonschema.Draft202012Validator.check_schema(s)
    return jsonschema.Draft202012Validator(s)


def rows(path):
    return [json.loads(line) for line in Path(path).read_text().splitlines() if line.strip()]


def run(*args, check=True):
    p = subprocess.run([str(CLI), *map(str, args)], capture_output=True, text=True)
    if check and p.returncode != 0:
        raise AssertionError(f"{args[0]} exited {p.returncode}: {p.stderr}")
    return p


class FixtureSidecars(unittest.TestCase):
    def test_scores(self):
        v = schema("scores")
        for r in rows(FIXTURE / "scores.jsonl"):
            v.validate(r)

    def test_instructions(self):
        v = schema("instructions")
        for r in rows(FIXTURE / "instructions.jsonl"):
            v.validate(r)

    def test_config(self):
        schema("config").validate(json.loads((FIXTURE / "config.json").read_text()))


class EngineOutputs(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.tmp = Path(tempfile.mkdtemp())
        cls.work = cls.tmp / "fixture"
        shutil.copytree(FIXTURE, cls.work)
        # Two failures: a mask with the wrong size and a two-sentence instruction.
        shutil.copy(cls.work / "masks" / "face_0001.png", cls.work / "masks" / "face_0000.png")
        lines = (cls.work / "instructions.jsonl").read_text().splitlines()
        lines[3] = json.dumps({"image_id": "face_0003", "instruction": "Brighten the face. Remove shadows."})
        (cls.work / "instructions.jsonl").write_text("\n".join(lines) + "\n")
        cls.out = cls.tmp / "out"
        cls.result = run("run", "--config", cls.work / "config.json", "--workers", "2", "--output", cls.out,
                         check=False)

    @classmethod
    def tearDownClass(cls):
        shutil.rmtree(cls.tmp)

    def test_run_reports_the_injected_failures(self):
        self.assertEqual(self.result.returncode, 1, self.result.stderr)

    def test_manifest_and_journal(self):
        v = schema("manifest")
        manifest = rows(self.out / "manifest.jsonl")
        self.assertEqual(len(manifest), 40)
        for r in manifest + rows(self.out / "journal.jsonl"):
            v.validate(r)
            self.assertTrue((self.out / r["input_path"]).is_file())
            self.assertTrue((self.out / r["output_path"]).is_file())

    def test_splits(self):
        v = schema("splits")
        for r in rows(self.out / "splits.jsonl"):
            v.validate(r)

    def test_failures(self):
        v = schema("failures")
        failures = rows(self.out / "failures.jsonl")
        for r in failures:
            v.validate(r)
        self.assertEqual({(r["image_id"], r["stage"]) for r in failures},
                         {("face_0000", "mask"), ("face_0003", "instruction")})

    def test_external_metric_sidecar_round_trip(self):
        v = schema("metric")
        ids = [r["image_id"] for r in rows(self.out / "manifest.jsonl")]
        sidecar = self.tmp / "lpips.jsonl"
        metric_rows = [{"image_id": i, "value": 0.1 + 0.01 * k} for k, i in enumerate(ids)]
        for r in metric_rows:
            v.validate(r)
        sidecar.write_text("".join(json.dumps(r) + "\n" for r in metric_rows))
        p = run("metrics", "--manifest", self.out / "manifest.jsonl", "--external", f"lpips={sidecar}",
                "--split", "all", "--json")
        [row] = json.loads(p.stdout)
        self.assertEqual((row["metric"], row["direction"], row["n"]), ("lpips", "lower", len(ids)))
        # The same whole-dataset sidecar, restricted to one split.
        p = run("metrics", "--manifest", self.out / "manifest.jsonl", "--external", f"lpips={sidecar}",
                "--split", "test", "--json")
        n_test = sum(r["split"] == "test" for r in rows(self.out / "manifest.jsonl"))
        self.assertEqual(json.loads(p.stdout)[0]["n"], n_test)
        # Ids outside the manifest are an error.
        stray = self.tmp / "stray.jsonl"
        stray.write_text(json.dumps({"image_id": "nobody", "value": 0.5}) + "\n")
        self.assertEqual(run("metrics", "--manifest", self.out / "manifest.jsonl", "--external",
                             f"lpips={stray}", check=False).returncode, 2)

    def test_mutated_manifest_rows_are_rejected_by_schema_and_engine(self):
        base = rows(self.out / "manifest.jsonl")[0]
        mutations = [
            lambda r: r.update(schema_version=2),
            lambda r: r["params"].update(pattern_kind="disco"),
            lambda r: r["params"].pop("opacity"),
            lambda r: r.update(split="holdout"),
        ]
        for k, mutate in enumerate(mutations):
            r = json.loads(json.dumps(base))
            mutate(r)
            self.assertFalse(schema("manifest").is_valid(r), r)
            bad = self.tmp / f"bad_{k}" / "manifest.jsonl"
            bad.parent.mkdir()
            bad.write_text(json.dumps(r) + "\n")
            self.assertEqual(run("metrics", "--manifest", bad, "--split", "all", check=False).returncode, 2, r)


class EngineAcceptsForeignRows(unittest.TestCase):
    """Rows written by hand (key order, spacing, extra keys) that satisfy the
    schemas must be accepted."""

    def test_filter_accepts_schema_valid_scores(self):
        with tempfile.TemporaryDirectory() as d:
            d = Path(d)
            score_rows = [
                {"prompt_scores": [0.3] * 7, "image_id": "a", "model": "ViT-L/14"},
                {"image_id": "b", "prompt_scores": [0.1, 0.2, 0.3, 0.2, 0.1, 0.2, 0.25]},
                {"image_id": "c", "prompt_scores": [1, 0, 0, 0, 0, 0, 1]},
            ]
            for r in score_rows:
                schema("scores").validate(r)
            (d / "scores.jsonl").write_text("\n".join(json.dumps(r, indent=None, separators=(" , ", " : "))
                                                      for r in score_rows) + "\n")
            cfg = {"scores_path": "scores.jsonl", "output_dir": "out",
                   "split_counts": {"train": 1, "val": 0, "test": 0}}
            schema("config").validate(cfg)
            (d / "config.json").write_text(json.dumps(cfg))
            p = run("filter", "--config", d / "config.json")
            self.assertEqual((d / "out" / "keep.txt").read_text().split(), ["a", "c"], p.stdout)


class SchemasRejectWhatTheEngineRejects(unittest.TestCase):
    def assert_invalid(self, name, row):
        self.assertFalse(schema(name).is_valid(row), row)

    def test_scores(self):
        self.assert_invalid("scores", {"image_id": "a", "prompt_scores": [0.2] * 6})
        self.assert_invalid("scores", {"image_id": "", "prompt_scores": [0.2] * 7})
        self.assert_invalid("scores", {"image_id": "a", "prompt_scores": ["0.2"] * 7})
        self.assert_invalid("scores", {"prompt_scores": [0.2] * 7})

    def test_instructions(self):
        self.assert_invalid("instructions", {"image_id": "a", "instruction": "Two\nlines."})
        self.assert_invalid("instructions", {"image_id": "a"})

    def test_splits_and_failures(self):
        self.assert_invalid("splits", {"image_id": "a", "split": "holdout"})
        self.assert_invalid("failures", {"image_id": "a", "stage": "paint", "message": ""})

    def test_config(self):
        self.assert_invalid("config", {"target_resolutoin": 256})
        self.assert_invalid("config", {"target_resolution": 32})
        self.assert_invalid("config", {"shadow": {"weights": {"disco": 1.0}}})
        for cfg in ({"target_resolutoin": 256}, {"target_resolution": 32}, {"shadow": {"weights": {"disco": 1.0}}}):
            with tempfile.TemporaryDirectory() as d:
                (Path(d) / "c.json").write_text(json.dumps(cfg))
                self.assertEqual(run("filter", "--config", Path(d) / "c.json", check=False).returncode, 2, cfg)


if __name__ == "__main__":
    unittest.main(verbosity=2)
