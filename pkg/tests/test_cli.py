import socket

import numpy as np
import pytest
from click.testing import CliRunner

from sensokit.cli import main


@pytest.fixture
def runner():
    return CliRunner()


def write_liking_csv(path, J=5, N=8, seed=0):
    rng = np.random.default_rng(seed)
    lines = ["," + ",".join(f"C{i + 1}" for i in range(N))]
    for j in range(J):
        lines.append(f"P{j + 1}," + ",".join(str(v) for v in rng.integers(1, 10, N)))
    path.write_text("\n".join(lines) + "\n")


def write_descriptive_csv(path, J=5, K=6, seed=3):
    rng = np.random.default_rng(seed)
    lines = ["," + ",".join(f"A{i + 1}" for i in range(K))]
    for j in range(J):
        vals = ",".join(f"{v:.4f}" for v in rng.uniform(1, 9, K))
        lines.append(f"P{j + 1},{vals}")
    path.write_text("\n".join(lines) + "\n")


def write_design_csv(path):
    path.write_text(",A,B\nP1,1,1\nP2,1,2\nP3,2,1\nP4,2,2\n")


class TestImportExport:
    def test_import_prints_summary(self, runner, tmp_path):
        f = tmp_path / "ham.csv"
        write_liking_csv(f)
        r = runner.invoke(main, ["import", str(f), "--role", "liking",
                                 "--session-dir", str(tmp_path / "s")])
        assert r.exit_code == 0, r.output
        assert "dims: 5 x 8" in r.output
        assert "missing cells: 0" in r.output

    def test_conflicting_delimiter_decimal(self, runner, tmp_path):
        f = tmp_path / "x.csv"
        f.write_text("1,5\n")
        r = runner.invoke(main, ["import", str(f), "--delimiter", "comma",
                                 "--decimal", "comma", "--session-dir", str(tmp_path / "s")])
        assert r.exit_code == 2
        assert "decimal_mark=comma" in r.output

    def test_export_reimport_bit_exact(self, runner, tmp_path):
        f = tmp_path / "lik.csv"
        write_liking_csv(f)
        sd = str(tmp_path / "s")
        assert runner.invoke(main, ["import", str(f), "--role", "liking",
                                    "--name", "lik", "--session-dir", sd]).exit_code == 0
        out = tmp_path / "out.csv"
        assert runner.invoke(main, ["export", "lik", "--out", str(out),
                                    "--session-dir", sd]).exit_code == 0
        r = runner.invoke(main, ["import", str(out), "--role", "liking",
                                 "--name", "lik2", "--session-dir", sd])
        assert r.exit_code == 0
        out2 = tmp_path / "out2.csv"
        assert runner.invoke(main, ["export", "lik2", "--out", str(out2),
                                    "--session-dir", sd]).exit_code == 0
        assert out.read_bytes() == out2.read_bytes()

    def test_list(self, runner, tmp_path):
        f = tmp_path / "lik.csv"
        write_liking_csv(f)
        sd = str(tmp_path / "s")
        runner.invoke(main, ["import", str(f), "--role", "liking", "--session-dir", sd])
        r = runner.invoke(main, ["list", "--session-dir", sd])
        assert "role=liking" in r.output and "5x8" in r.output


class TestAnalyze:
    @pytest.fixture
    def loaded(self, runner, tmp_path):
        sd = str(tmp_path / "s")
        lik, desc, des = tmp_path / "lik.csv", tmp_path / "desc.csv", tmp_path / "des.csv"
        write_liking_csv(lik, J=4, N=10)
        write_descriptive_csv(desc, J=4)
        write_design_csv(des)
        for path, role, name in [(lik, "liking", "lik"), (desc, "descriptive", "desc"),
                                 (des, "design", "des")]:
            r = runner.invoke(main, ["import", str(path), "--role", role,
                                     "--name", name, "--session-dir", sd])
            assert r.exit_code == 0, r.output
        return sd

    def test_pca_csv_outputs(self, runner, tmp_path, loaded):
        out = tmp_path / "o1"
        r = runner.invoke(main, ["analyze", "pca", "desc", "--standardise",
                                 "--components", "2", "--out", str(out),
                                 "--session-dir", loaded])
        assert r.exit_code == 0, r.output
        for name in ("scores.csv", "loadings.csv", "corrloadings.csv", "explvar.csv"):
            assert (out / name).exists()

    def test_pca_svg_outputs(self, runner, tmp_path, loaded):
        out = tmp_path / "o2"
        r = runner.invoke(main, ["analyze", "pca", "desc", "--components", "2",
                                 "--format", "svg", "--out", str(out),
                                 "--session-dir", loaded])
        assert r.exit_code == 0, r.output
        for name in ("scores.svg", "loadings.svg", "corrloadings.svg", "explvar.svg"):
            content = (out / name).read_text()
            assert content.startswith("<svg") and content.rstrip().endswith("</svg>")

    def test_json_output_deterministic(self, runner, tmp_path, loaded):
        outs = []
        for sub in ("a", "b"):
            out = tmp_path / sub
            r = runner.invoke(main, ["analyze", "pca", "desc", "--components", "2",
                                     "--format", "json", "--out", str(out),
                                     "--session-dir", loaded])
            assert r.exit_code == 0, r.output
            outs.append((out / "pca.json").read_bytes())
        assert outs[0] == outs[1]

    def test_prefmap_sector_counts(self, runner, tmp_path, loaded):
        out = tmp_path / "o3"
        r = runner.invoke(main, ["analyze", "prefmap", "lik", "desc",
                                 "--direction", "internal", "--engine", "plsr",
                                 "--sectors", "4", "--out", str(out),
                                 "--session-dir", loaded])
        assert r.exit_code == 0, r.output
        lines = (out / "sectors.csv").read_text().splitlines()
        counts = [int(line.split(",")[1]) for line in lines[1:]]
        assert sum(counts) == 10

    def test_conjoint_four_tables(self, runner, tmp_path, loaded):
        out = tmp_path / "o4"
        r = runner.invoke(main, ["analyze", "conjoint", "lik", "des",
                                 "--factors", "A,B", "--structure", "1",
                                 "--out", str(out), "--session-dir", loaded])
        assert r.exit_code == 0, r.output
        for name in ("lsmeans.csv", "fixed.csv", "random.csv", "pairwise.csv"):
            assert (out / name).exists()
        header = (out / "lsmeans.csv").read_text().splitlines()[0]
        assert header.startswith("Model parameter,")

    def test_basic_stats_outputs(self, runner, tmp_path, loaded):
        out = tmp_path / "o5"
        r = runner.invoke(main, ["analyze", "box", "lik", "--out", str(out),
                                 "--session-dir", loaded])
        assert r.exit_code == 0, r.output
        assert (out / "boxstats.csv").read_text().startswith("series,min,q25,median,q75,max")
        r = runner.invoke(main, ["analyze", "histogram", "lik", "--series", "P1",
                                 "--format", "svg", "--out", str(out),
                                 "--session-dir", loaded])
        assert r.exit_code == 0, r.output
        assert (out / "histogram.svg").exists()

    def test_unknown_dataset_exit_2(self, runner, tmp_path, loaded):
        r = runner.invoke(main, ["analyze", "pca", "nope", "--out",
                                 str(tmp_path / "x"), "--session-dir", loaded])
        assert r.exit_code == 2

    def test_missing_values_exit_2(self, runner, tmp_path):
        sd = str(tmp_path / "s")
        f = tmp_path / "m.csv"
        f.write_text(",C1,C2,C3\nP1,1,NA,3\nP2,2,3,4\nP3,5,6,7\n")
        runner.invoke(main, ["import", str(f), "--role", "descriptive",
                             "--name", "m", "--session-dir", sd])
        r = runner.invoke(main, ["analyze", "pca", "m", "--out", str(tmp_path / "x"),
                                 "--session-dir", sd])
        assert r.exit_code == 2
        assert "missing values present" in r.output


class TestServe:
    def test_occupied_port_exit_4(self, runner, tmp_path):
        sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        sock.bind(("127.0.0.1", 0))
        port = sock.getsockname()[1]
        try:
            r = runner.invoke(main, ["serve", "--port", str(port),
                                     "--session-dir", str(tmp_path / "s")])
            assert r.exit_code == 4
            assert "already in use" in r.output
        finally:
            sock.close()
