"""Depth tables, plot-ready CSV files and result persistence.

CSV schemas (UTF-8, comma separated, one header row):

``depth.csv``
    order, r, depth, expected_depth, two_qubit_depth, cz_count, rzz_count
``neel-vs-time_<tag>.csv``
    tau, value
``depth-vs-r_<order>_L<L>.csv``
    r, depth
``mps-diagnostics_<tag>.csv``
    tau, max_link_dim, max_trunc_err, sweep_seconds (``nan`` when timings
    were not recorded)
``truncation_log.csv``
    step, link, eps, chi
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

from ..model import HubbardParams
from ..results import ResultSet
from ..trotter import ORDERS, TrotterPlan, trotter_schedule
from .config import ExperimentConfig
from .sweep import circuit_metrics

PLOT_KINDS = ("neel-vs-time", "depth-vs-r", "mps-diagnostics")
RESULTS_FILE = "results.json"
TIMINGS_FILE = "timings.json"
TRUNCATION_FILE = "truncation_log.csv"

# closed forms for the layered depth of r steps of each order
DEPTH_FORMULAS = {
    "first": lambda r: 23 * r,
    "second": lambda r: 46 * r,
    "second-optimized": lambda r: 33 * r + 4,
}

# chains long enough that both hopping layers are populated
_REFERENCE_LENGTHS = (3, 4, 5)


@dataclass
class DepthTable:
    """Per-order, per-r depth rows and whether they agree across chain lengths."""

    L: int
    rows: list[dict] = field(default_factory=list)
    l_independent: bool = True
    checked_lengths: tuple[int, ...] = ()

    def depths(self, order: str) -> dict[int, int]:
        return {row["r"]: row["depth"] for row in self.rows if row["order"] == order}

    def to_csv(self) -> str:
        cols = ["order", "r", "depth", "expected_depth", "two_qubit_depth", "cz_count", "rzz_count"]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for row in self.rows:
            w.writerow([row[c] for c in cols])
        return buf.getvalue()


def _depth(L: int, order: str, r: int, dt: float) -> int:
    c = trotter_schedule(TrotterPlan(order, 1, dt, HubbardParams(L))).circuit(r)
    return circuit_metrics(c)["depth"]


def depth_report(cfg: ExperimentConfig) -> DepthTable:
    """Layered depth and basis two-qubit counts for all three orders over the r range.

    Depths are recomputed on short reference chains and compared, so the
    table records whether they depend on the chain length.  Chains with a
    single bond have an empty second hopping layer and are excluded from
    that comparison.
    """
    L = cfg.params.L
    table = DepthTable(L)
    others = tuple(n for n in _REFERENCE_LENGTHS if n != L) if L >= 3 else ()
    table.checked_lengths = (L, *others) if L >= 3 else (L,)
    for order in ORDERS:
        sched = trotter_schedule(TrotterPlan(order, 1, cfg.plan.dt, cfg.params))
        for r in cfg.plan.r_values:
            m = circuit_metrics(sched.circuit(r))
            table.rows.append(
                {
                    "order": order,
                    "r": r,
                    "depth": m["depth"],
                    "expected_depth": DEPTH_FORMULAS[order](r),
                    "two_qubit_depth": m["two_qubit_depth"],
                    "cz_count": m["cz_count"],
                    "rzz_count": m["rzz_count"],
                }
            )
            for n in others:
                if _depth(n, order, r, cfg.plan.dt) != m["depth"]:
                    table.l_independent = False
    if L < 3:
        table.l_independent = False
    return table


# ---------------------------------------------------------------- plot data


def _tag(rs: ResultSet) -> str:
    cfg = rs.config
    backend = cfg["backend"]
    L = cfg["model"]["L"]
    if backend == "exact":
        return f"exact_L{L}"
    tag = f"{backend}_{cfg['plan']['order']}_L{L}"
    if backend == "mps":
        tag += f"_chi{cfg['mps']['chi_max']}"
    return tag


def _write_csv(path: Path, header: list[str], rows) -> Path:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    path.write_text(buf.getvalue(), encoding="utf-8")
    return path


def _fmt(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "nan"
    return repr(float(x)) if isinstance(x, float) else str(x)


def emit_plot_data(rs: ResultSet, kind: str, out_dir: str | Path) -> list[Path]:
    """Write one CSV per curve for ``kind`` and return their paths."""
    if kind not in PLOT_KINDS:
        raise ValueError(f"kind must be one of {PLOT_KINDS}, got {kind!r}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if kind == "neel-vs-time":
        rows = []
        for p in rs.points:
            obs = p.diagnostics.get("observables", {})
            if "neel" not in obs:
                raise ValueError("results do not contain the neel observable")
            rows.append([_fmt(p.tau), _fmt(obs["neel"]["value"])])
        return [_write_csv(out / f"neel-vs-time_{_tag(rs)}.csv", ["tau", "value"], rows)]
    if kind == "depth-vs-r":
        cfg = ExperimentConfig.from_dict(rs.config)
        table = depth_report(replace(cfg, plan=replace(cfg.plan, r_min=1)))
        paths = []
        for order in ORDERS:
            rows = [[r, d] for r, d in sorted(table.depths(order).items())]
            name = f"depth-vs-r_{order}_L{table.L}.csv"
            paths.append(_write_csv(out / name, ["r", "depth"], rows))
        return paths
    if rs.config.get("backend") != "mps":
        raise ValueError("mps-diagnostics needs results from the mps backend")
    rows = [
        [
            _fmt(p.tau),
            p.diagnostics["max_link_dim"],
            _fmt(p.diagnostics["max_trunc_err"]),
            _fmt(p.timings.get("sweep_seconds")),
        ]
        for p in rs.points
    ]
    header = ["tau", "max_link_dim", "max_trunc_err", "sweep_seconds"]
    return [_write_csv(out / f"mps-diagnostics_{_tag(rs)}.csv", header, rows)]


# ---------------------------------------------------------------- persistence


def write_results(rs: ResultSet, out_dir: str | Path, record_timings: bool = False) -> list[Path]:
    """Write ``results.json`` (timing-free, byte-reproducible) and its side files."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / RESULTS_FILE]
    paths[0].write_text(rs.to_json(), encoding="utf-8")
    log = rs.attachments.get("truncation_log")
    if log is not None:
        paths.append(out / TRUNCATION_FILE)
        paths[-1].write_text(log.to_csv(), encoding="utf-8")
    if record_timings:
        paths.append(out / TIMINGS_FILE)
        paths[-1].write_text(json.dumps(rs.timings(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return paths


def read_results(path: str | Path) -> ResultSet:
    """Load ``results.json`` (or a directory holding it), merging a timing sidecar if present."""
    p = Path(path)
    if p.is_dir():
        p = p / RESULTS_FILE
    rs = ResultSet.from_json(p.read_text(encoding="utf-8"))
    side = p.with_name(TIMINGS_FILE)
    if side.exists():
        rs.merge_timings(json.loads(side.read_text(encoding="utf-8")))
    return rs
