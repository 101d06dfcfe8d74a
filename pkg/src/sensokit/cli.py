"""Command-line interface: import data, run analyses, export results, serve."""

from __future__ import annotations

import json
import socket
import sys
from pathlib import Path

import click
import numpy as np

from .analyses import basic_stats_tables, run_method
from .dataset import ImportOptions, export_delimited, import_dataset, summarize
from .errors import ConvergenceError, FoldError, ImportError_, ValidationError
from .session import Session
from .svgplot import (
    box_svg,
    histogram_svg,
    interaction_svg,
    line_svg,
    main_effect_svg,
    scatter_svg,
    stacked_histogram_svg,
)

EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
EXIT_PORT = 4


def _session(session_dir: str) -> Session:
    return Session(session_dir)


def _fail(code: int, message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


@click.group()
def main() -> None:
    """Sensometrics toolkit: liking statistics, bilinear models, preference
    mapping, and mixed-model conjoint analysis."""


@main.command("import")
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@click.option("--role", type=click.Choice(["liking", "characteristics", "design", "descriptive", "other"]), default="other")
@click.option("--delimiter", type=click.Choice(["tab", "comma", "space"]), default="comma")
@click.option("--decimal", type=click.Choice(["period", "comma"]), default="period")
@click.option("--encoding", type=click.Choice(["ascii", "utf8", "latin1"]), default="utf8")
@click.option("--row-names/--no-row-names", default=True)
@click.option("--col-names/--no-col-names", default=True)
@click.option("--name", default=None, help="dataset name (defaults to the file stem)")
@click.option("--session-dir", default="./session", show_default=True)
def cmd_import(path, role, delimiter, decimal, encoding, row_names, col_names, name, session_dir):
    """Import a delimited text file or xlsx workbook into the session store."""
    p = Path(path)
    fmt = "workbook" if p.suffix.lower() in (".xls", ".xlsx") else "delimited"
    try:
        opts = ImportOptions(
            format=fmt,
            delimiter=delimiter,
            decimal_mark=decimal,
            encoding=encoding,
            has_row_names=row_names,
            has_col_names=col_names,
            dataset_name=name or p.stem,
            role=role,
        )
        d = import_dataset(p.read_bytes(), opts)
        _session(session_dir).add_dataset(d)
    except (ImportError_, ValidationError) as exc:
        _fail(EXIT_VALIDATION, str(exc))
    s = summarize(d)
    click.echo(f"imported {d.name} ({d.id}) role={d.role}")
    click.echo(f"  dims: {s.dims[0]} x {s.dims[1]}")
    if s.mean is not None:
        click.echo(f"  mean: {s.mean:.6g}  std: {s.std:.6g}  min: {s.min:.6g}  max: {s.max:.6g}")
    click.echo(f"  missing cells: {s.missing_count}")


@main.command("list")
@click.option("--session-dir", default="./session", show_default=True)
def cmd_list(session_dir):
    """List datasets in the session store."""
    for row in _session(session_dir).list_datasets():
        dims = row["summary"]["dims"]
        click.echo(f"{row['id']}  {row['name']}  role={row['role']}  {dims[0]}x{dims[1]}")


@main.command("export")
@click.argument("ref")
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--delimiter", type=click.Choice(["tab", "comma", "space"]), default="comma")
@click.option("--decimal", type=click.Choice(["period", "comma"]), default="period")
@click.option("--groups/--no-groups", default=True, help="include underscore metadata")
@click.option("--session-dir", default="./session", show_default=True)
def cmd_export(ref, out, delimiter, decimal, groups, session_dir):
    """Write a dataset back to delimited text (bit-exact round trip)."""
    try:
        d = _session(session_dir).get_dataset(ref)
        opts = ImportOptions(delimiter=delimiter, decimal_mark=decimal)
        Path(out).write_bytes(export_delimited(d, opts, include_groups=groups))
    except KeyError:
        _fail(EXIT_VALIDATION, f"no dataset {ref!r}")
    except ValidationError as exc:
        _fail(EXIT_VALIDATION, str(exc))
    click.echo(f"wrote {out}")


def _write(out_dir: Path, name: str, content: str) -> None:
    path = out_dir / name
    path.write_text(content)
    click.echo(f"wrote {path}")


def _matrix_csv(labels, matrix, header_prefix="PC") -> str:
    matrix = np.asarray(matrix)
    lines = ["," + ",".join(f"{header_prefix}{a + 1}" for a in range(matrix.shape[1]))]
    for lab, row in zip(labels, matrix):
        lines.append(lab + "," + ",".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def _latent_csvs(out_dir: Path, model: dict) -> None:
    _write(out_dir, "scores.csv", _matrix_csv(model["row_labels"], model["x_scores"]))
    _write(out_dir, "loadings.csv", _matrix_csv(model["x_var_labels"], model["x_loadings"]))
    _write(out_dir, "corrloadings.csv",
           _matrix_csv(model["x_var_labels" if model["y_var_labels"] is None else "x_var_labels"],
                       model["x_corr_loadings"]) if model["x_corr_loadings"] is not None else "")
    ev_lines = ["component,calibrated_x,validated_x,calibrated_y,validated_y"]
    A = len(model["calib_explvar_x"])
    for a in range(A):
        def cell(key):
            v = model.get(key)
            return repr(float(v[a])) if v is not None else ""
        ev_lines.append(
            f"{a + 1},{cell('calib_explvar_x')},{cell('valid_explvar_x')},"
            f"{cell('calib_explvar_y')},{cell('valid_explvar_y')}"
        )
    _write(out_dir, "explvar.csv", "\n".join(ev_lines) + "\n")


def _latent_svgs(out_dir: Path, plots: dict) -> None:
    _write(out_dir, "scores.svg", scatter_svg(plots["scores"], "Scores"))
    _write(out_dir, "loadings.svg", scatter_svg(plots["loadings"], "Loadings"))
    corr = plots["corr_loadings"]
    pts = {"points": corr["x_points"], "labels": corr["x_labels"]}
    _write(out_dir, "corrloadings.svg",
           scatter_svg(pts, "Correlation loadings", rings=corr["rings"],
                       sector_boundaries=corr.get("sector_boundaries")))
    ev = plots["explvar"]
    series = [{"label": k, "values": v} for k, v in ev.items()
              if k not in ("kind", "components")]
    _write(out_dir, "explvar.svg",
           line_svg(series, "Explained variance", "components", "% variance",
                    x_values=ev["components"]))


_BASIC_KINDS = ("box", "stacked", "histogram")


@main.command("analyze")
@click.argument("method")
@click.argument("refs", nargs=-1)
@click.option("--standardise", is_flag=True, default=False)
@click.option("--standardise-x", is_flag=True, default=False)
@click.option("--standardise-y", is_flag=True, default=False)
@click.option("--components", type=int, default=None)
@click.option("--direction", type=click.Choice(["internal", "external"]), default="internal")
@click.option("--engine", type=click.Choice(["plsr", "pcr"]), default="plsr")
@click.option("--sectors", type=int, default=4)
@click.option("--factors", default=None, help="comma-separated design factors")
@click.option("--char-factors", default=None, help="comma-separated characteristics factors")
@click.option("--structure", type=click.Choice(["1", "2", "3"]), default="2")
@click.option("--mode", type=click.Choice(["raw_liking", "pca_loadings", "plsda"]), default="raw_liking")
@click.option("--pcs", default=None, help="comma-separated PC numbers for pca_loadings mode")
@click.option("--categorical", default=None, help="comma-separated categorical characteristics")
@click.option("--axis", type=click.Choice(["row_wise", "column_wise"]), default="row_wise")
@click.option("--percent", is_flag=True, default=False)
@click.option("--series", default=None, help="series label for single histograms")
@click.option("--scale", default=None, help="declared hedonic range lo:hi for histograms")
@click.option("--out", type=click.Path(file_okay=False), default=".", show_default=True)
@click.option("--format", "fmt", type=click.Choice(["csv", "json", "svg"]), default="csv", show_default=True)
@click.option("--session-dir", default="./session", show_default=True)
def cmd_analyze(method, refs, standardise, standardise_x, standardise_y, components,
                direction, engine, sectors, factors, char_factors, structure, mode, pcs,
                categorical, axis, percent, series, scale, out, fmt, session_dir):
    """Run an analysis and write its tables or plots.

    Methods: pca, plsr, pcr, prefmap, conjoint, inddiff, box, stacked, histogram.
    """
    session = _session(session_dir)
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    scale_t = None
    if scale:
        lo, hi = scale.split(":")
        scale_t = (int(lo), int(hi))
    try:
        if method in _BASIC_KINDS:
            _analyze_basic(session, method, refs, axis, percent, series, scale_t, out_dir, fmt)
            return
        options = _build_options(method, refs, dict(
            standardise=standardise, standardise_x=standardise_x,
            standardise_y=standardise_y, components=components, direction=direction,
            engine=engine, sectors=sectors, factors=factors, char_factors=char_factors,
            structure=structure, mode=mode, pcs=pcs, categorical=categorical,
        ))
        bundle = {"method": method, "options": options,
                  "result": run_method(method, session, options)}
    except KeyError as exc:
        _fail(EXIT_VALIDATION, f"no dataset {exc.args[0]!r}")
    except (ValidationError, ImportError_) as exc:
        _fail(EXIT_VALIDATION, str(exc))
    except (ConvergenceError, FoldError, np.linalg.LinAlgError) as exc:
        _fail(EXIT_NUMERICAL, str(exc))
    _write_bundle(out_dir, method, bundle, fmt)


def _build_options(method: str, refs: tuple[str, ...], flags: dict) -> dict:
    def need(n: int, names: str) -> None:
        if len(refs) != n:
            raise ValidationError(f"{method} needs {n} dataset refs: {names}")

    if method == "pca":
        need(1, "DATASET")
        return {"dataset": refs[0], "standardise": flags["standardise"],
                "components": flags["components"]}
    if method in ("plsr", "pcr"):
        need(2, "X Y")
        return {"x": refs[0], "y": refs[1], "standardise_x": flags["standardise_x"],
                "standardise_y": flags["standardise_y"], "components": flags["components"]}
    if method == "prefmap":
        need(2, "LIKING DESCRIPTIVE")
        return {"liking": refs[0], "descriptive": refs[1], "direction": flags["direction"],
                "engine": flags["engine"], "standardise_x": flags["standardise_x"],
                "standardise_y": flags["standardise_y"], "components": flags["components"],
                "sectors": flags["sectors"]}
    if method == "conjoint":
        if len(refs) not in (2, 3):
            raise ValidationError("conjoint needs refs: LIKING DESIGN [CHARACTERISTICS]")
        all_factors = (flags["factors"] or "").split(",") if flags["factors"] else []
        char_factors = (flags["char_factors"] or "").split(",") if flags["char_factors"] else []
        return {"liking": [refs[0]], "design": refs[1],
                "characteristics": refs[2] if len(refs) == 3 else None,
                "design_factors": [f for f in all_factors if f] or None,
                "characteristic_factors": [f for f in char_factors if f],
                "structure": flags["structure"]}
    if method == "inddiff":
        need(2, "LIKING CHARACTERISTICS")
        return {"liking": refs[0], "characteristics": refs[1], "mode": flags["mode"],
                "pcs": [int(p) for p in flags["pcs"].split(",")] if flags["pcs"] else None,
                "categorical": [c for c in (flags["categorical"] or "").split(",") if c],
                "components": flags["components"]}
    raise ValidationError(f"unknown method {method!r}")


def _analyze_basic(session, kind, refs, axis, percent, series, scale_t, out_dir, fmt):
    if len(refs) != 1:
        raise ValidationError(f"{kind} needs one dataset ref")
    d = session.get_dataset(refs[0])
    table = basic_stats_tables(d, kind, axis, series, scale_t)
    if fmt == "json":
        _write(out_dir, f"{kind}.json", json.dumps(table, indent=2, sort_keys=True) + "\n")
    elif fmt == "svg":
        if kind == "box":
            _write(out_dir, "box.svg", box_svg(table["series"], f"Box plot: {d.name}"))
        elif kind == "stacked":
            _write(out_dir, "stacked.svg",
                   stacked_histogram_svg(table, f"Stacked histogram: {d.name}", percent))
        else:
            _write(out_dir, "histogram.svg", histogram_svg(table, f"Histogram: {series}"))
    else:
        if kind == "box":
            lines = ["series,min,q25,median,q75,max"]
            for s in table["series"]:
                lines.append(f'{s["series_label"]},{s["min"]!r},{s["q25"]!r},'
                             f'{s["median"]!r},{s["q75"]!r},{s["max"]!r}')
            _write(out_dir, "boxstats.csv", "\n".join(lines) + "\n")
        else:
            key = "percents" if percent else "counts"
            lines = ["series," + ",".join(str(b) for b in table["bin_values"])]
            for lab, row in zip(table["series_labels"], table[key]):
                lines.append(lab + "," + ",".join(repr(float(v)) for v in row))
            _write(out_dir, f"{kind}.csv", "\n".join(lines) + "\n")


def _write_bundle(out_dir: Path, method: str, bundle: dict, fmt: str) -> None:
    if fmt == "json":
        _write(out_dir, f"{method}.json", json.dumps(bundle, indent=2, sort_keys=True) + "\n")
        return
    result = bundle["result"]
    if method == "conjoint":
        sub = result["conjoint_results"]
        for i, r in enumerate(sub):
            prefix = "" if len(sub) == 1 else f"{r['response']}-"
            if fmt == "csv":
                for name, text in r["tables_csv"].items():
                    _write(out_dir, f"{prefix}{name}.csv", text)
            else:
                for key, payload in r["effect_plots"].items():
                    safe = key.replace(":", "_")
                    if payload["kind"] == "main_effect":
                        _write(out_dir, f"{prefix}{safe}.svg",
                               main_effect_svg(payload, f"Main effect: {payload['factor']}"))
                    else:
                        _write(out_dir, f"{prefix}{safe}.svg",
                               interaction_svg(payload, "Interaction"))
        return
    if fmt == "csv":
        _latent_csvs(out_dir, result["model"])
        if method == "prefmap":
            corr = result["plots"]["corr_loadings"]
            if "sector_counts" in corr:
                lines = ["sector,count"]
                for k, c in enumerate(corr["sector_counts"]):
                    lines.append(f"{k},{c}")
                _write(out_dir, "sectors.csv", "\n".join(lines) + "\n")
    else:
        _latent_svgs(out_dir, result["plots"])


@main.command("serve")
@click.option("--port", type=int, default=8174, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--session-dir", default="./session", show_default=True)
@click.option("--static-dir", default=None, help="directory with the browser UI build")
def cmd_serve(port, host, session_dir, static_dir):
    """Run the HTTP service until interrupted."""
    import uvicorn

    from .service import create_app

    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.bind((host, port))
    except OSError:
        _fail(EXIT_PORT, f"port {port} is already in use")
    finally:
        probe.close()
    click.echo(f"serving on http://{host}:{port} (session: {session_dir})")
    app = create_app(session_dir, static_dir)
    uvicorn.run(app, host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()
