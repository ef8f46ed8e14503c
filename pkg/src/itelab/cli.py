"""Config-driven experiment runner.

``itelab run CONFIG`` executes the experiments named in a TOML file and
writes one CSV per table plus a JSON bundle into the output directory.
``itelab oracle FUNCTION ARGS...`` prints an extended-precision reference
value.

Exit codes: 0 all assertions hold, 1 an assertion failed, 2 the config is
invalid, 3 a numerical routine failed.  Codes 1 and 3 leave a
``failure.json`` record next to the reports.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, CutoffError, ItelabError, ProfileError

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

SCHEMA_VERSION = 1
EXPERIMENTS = ("ite-scan", "branch-trace", "weyl-report", "verify-identities", "verify-symbol", "scattering")
CACHE_ENV = "ITELAB_CACHE_DIR"

# (default, lower, upper)
TOLERANCES = {
    "identity": (1e-7, 1e-14, 1e-2),
    "unit_modulus": (1e-8, 1e-15, 1e-2),
    "nonscattering": (1e-6, 1e-14, 1e-1),
}


# --------------------------------------------------------------------------
# config


@dataclass(frozen=True)
class RunConfig:
    """Validated contents of a run file."""

    profile: object  # MediumProfile
    experiments: tuple[str, ...]
    output_dir: Path
    lambda_max: float = 100.0
    alpha: float | None = None
    checkpoints: int = 20
    cutoff_margin: int = 8
    density_factor: float | None = None
    trace_modes: tuple[int, ...] = (0, 1, 2)
    identity_modes: int = 20
    identity_lambdas: tuple[float, float, int] = (0.5, 60.0, 50)
    symbol_modes: tuple[int, ...] = (20, 40, 80)
    symbol_lambda: float = 10.0
    scattering_lambda_max: float = 500.0
    tolerances: dict = field(default_factory=lambda: {k: v[0] for k, v in TOLERANCES.items()})
    formats: tuple[str, ...] = ("csv", "json")
    test_mode: bool = False
    digest: str = ""


def _get(table: dict, key: str, kind, where: str, default=None):
    if key not in table:
        return default
    value = table[key]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind) or (kind is int and isinstance(value, bool)):
        raise ConfigError(f"{where}.{key}", f"expected {getattr(kind, '__name__', kind)}, got {type(value).__name__}")
    return value


def _positive(value: float, name: str) -> float:
    if not (math.isfinite(value) and value > 0):
        raise ConfigError(name, f"must be a positive finite number, got {value!r}")
    return value


def _profile_from(table: dict, test_mode: bool):
    from .profiles import reference_profiles
    from .radialode import MediumProfile, Piece

    if not isinstance(table, dict):
        raise ConfigError("profile", "missing [profile] table")
    if "reference" in table:
        name = _get(table, "reference", str, "profile")
        refs = reference_profiles()
        if name not in refs:
            raise ConfigError("profile.reference", f"unknown reference profile {name!r}; choose from {sorted(refs)}")
        return refs[name]
    bps = _get(table, "breakpoints", list, "profile")
    coeffs = _get(table, "coeffs", list, "profile")
    if bps is None or coeffs is None:
        raise ConfigError("profile", "give either 'reference' or both 'breakpoints' and 'coeffs'")
    if len(bps) != len(coeffs) + 1 or len(coeffs) == 0:
        raise ConfigError("profile.coeffs", "need one coefficient list per interval between breakpoints")
    try:
        bps = [float(b) for b in bps]
        cs = [tuple(float(c) for c in row) for row in coeffs]
    except (TypeError, ValueError) as exc:
        raise ConfigError("profile", f"breakpoints and coefficients must be numbers ({exc})") from None
    pieces = tuple(Piece(a, b, c) for a, b, c in zip(bps[:-1], bps[1:], cs))
    gamma = _get(table, "gamma", int, "profile")
    fixture = bool(_get(table, "fixture", bool, "profile", False))
    if fixture and not test_mode:
        raise ConfigError("profile.fixture", "fixture profiles are only allowed with test_mode = true")
    if gamma is None:
        last = pieces[-1]
        slope = sum(j * c * last.end ** (j - 1) for j, c in enumerate(last.coeffs) if j)
        gamma = 1 if slope > 0 else -1
    try:
        profile = MediumProfile(bps[-1], pieces, gamma=gamma, fixture=fixture)
    except ProfileError as exc:
        raise ConfigError("profile", str(exc)) from None
    if profile.is_free and not test_mode:
        raise ConfigError("profile", "n = 1 is a test fixture; set test_mode = true to run it")
    return profile


def load_config(path: str | os.PathLike) -> RunConfig:
    """Parse and validate a TOML run file."""
    path = Path(path)
    try:
        raw_bytes = path.read_bytes()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    try:
        raw = tomllib.loads(raw_bytes.decode("utf-8"))
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError("config", f"{path}: {exc}") from None
    test_mode = bool(_get(raw, "test_mode", bool, "config", False))

    exps = raw.get("experiments", raw.get("experiment"))
    if isinstance(exps, str):
        exps = [exps]
    if not isinstance(exps, list) or not exps:
        raise ConfigError("experiments", "name at least one experiment")
    for e in exps:
        if e not in EXPERIMENTS:
            raise ConfigError("experiments", f"unknown experiment {e!r}; choose from {list(EXPERIMENTS)}")

    profile = _profile_from(raw.get("profile"), test_mode)

    scan = raw.get("scan", {})
    lam_max = _positive(_get(scan, "lambda_max", float, "scan", 100.0), "scan.lambda_max")
    alpha = _get(scan, "alpha", float, "scan")
    if alpha is not None and not (0 < alpha < lam_max):
        raise ConfigError("scan.alpha", f"must lie in (0, lambda_max), got {alpha!r}")
    checkpoints = _get(scan, "checkpoints", int, "scan", 20)
    if not 1 <= checkpoints <= 10_000:
        raise ConfigError("scan.checkpoints", "must be between 1 and 10000")
    margin = _get(scan, "cutoff_margin", int, "scan", 8)
    if not 8 <= margin <= 100:
        raise ConfigError("scan.cutoff_margin", "must be between 8 and 100")
    density = _get(scan, "density_factor", float, "scan")
    trace_modes = tuple(_get(scan, "modes", list, "scan", [0, 1, 2]))
    if not all(isinstance(m, int) and m >= 0 for m in trace_modes):
        raise ConfigError("scan.modes", "modes must be non-negative integers")

    ident = raw.get("identities", {})
    id_modes = _get(ident, "max_mode", int, "identities", 20)
    lo = _positive(_get(ident, "lambda_min", float, "identities", 0.5), "identities.lambda_min")
    hi = _positive(_get(ident, "lambda_max", float, "identities", 60.0), "identities.lambda_max")
    pts = _get(ident, "points", int, "identities", 50)
    if hi <= lo or pts < 1 or id_modes < 0:
        raise ConfigError("identities", "need lambda_min < lambda_max, points >= 1, max_mode >= 0")

    sym = raw.get("symbol", {})
    sym_modes = tuple(_get(sym, "modes", list, "symbol", [20, 40, 80]))
    if not all(isinstance(m, int) and m >= 1 for m in sym_modes):
        raise ConfigError("symbol.modes", "modes must be positive integers")
    sym_lam = _positive(_get(sym, "lambda", float, "symbol", 10.0), "symbol.lambda")

    sc = raw.get("scattering", {})
    sc_max = _positive(_get(sc, "lambda_max", float, "scattering", min(500.0, lam_max)), "scattering.lambda_max")
    if sc_max > lam_max:
        raise ConfigError("scattering.lambda_max", "must not exceed scan.lambda_max")

    tol_table = raw.get("tolerances", {})
    tols = {}
    for key, (default, low, high) in TOLERANCES.items():
        v = _get(tol_table, key, float, "tolerances", default)
        if not low <= v <= high:
            raise ConfigError(f"tolerances.{key}", f"must lie in [{low:g}, {high:g}], got {v!r}")
        tols[key] = v
    for key in tol_table:
        if key not in TOLERANCES:
            raise ConfigError(f"tolerances.{key}", "unknown tolerance")

    out = raw.get("output", {})
    out_dir = Path(_get(out, "dir", str, "output", "itelab-out"))
    if not out_dir.is_absolute():
        out_dir = path.parent / out_dir
    formats = tuple(_get(out, "formats", list, "output", ["csv", "json"]))
    if not formats or not set(formats) <= {"csv", "json"}:
        raise ConfigError("output.formats", "formats must be a non-empty subset of ['csv', 'json']")

    return RunConfig(
        profile=profile,
        experiments=tuple(exps),
        output_dir=out_dir,
        lambda_max=lam_max,
        alpha=alpha,
        checkpoints=checkpoints,
        cutoff_margin=margin,
        density_factor=density,
        trace_modes=trace_modes,
        identity_modes=id_modes,
        identity_lambdas=(lo, hi, pts),
        symbol_modes=sym_modes,
        symbol_lambda=sym_lam,
        scattering_lambda_max=sc_max,
        tolerances=tols,
        formats=formats,
        test_mode=test_mode,
        digest=hashlib.sha256(raw_bytes).hexdigest(),
    )


# --------------------------------------------------------------------------
# bundle


@dataclass
class Table:
    columns: list[str]
    rows: list[list]


@dataclass
class ExperimentResult:
    name: str
    tables: dict[str, Table] = field(default_factory=dict)
    summary: dict = field(default_factory=dict)
    failures: list[dict] = field(default_factory=list)

    def check(self, name: str, ok: bool, value, threshold, detail: str = "") -> None:
        self.summary.setdefault("checks", {})[name] = bool(ok)
        if not ok:
            self.failures.append({"check": name, "value": value, "threshold": threshold, "detail": detail})


@dataclass
class ReportBundle:
    provenance: dict
    experiments: dict[str, ExperimentResult]

    @property
    def failures(self) -> list[dict]:
        return [dict(f, experiment=name) for name, e in self.experiments.items() for f in e.failures]

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "provenance": self.provenance,
            "experiments": {
                name: {
                    "tables": {t: {"columns": tab.columns, "rows": tab.rows} for t, tab in e.tables.items()},
                    "summary": e.summary,
                    "failures": e.failures,
                }
                for name, e in self.experiments.items()
            },
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ReportBundle":
        if data.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema version {data.get('schema_version')!r}")
        exps = {}
        for name, e in data["experiments"].items():
            tables = {t: Table(list(v["columns"]), [list(r) for r in v["rows"]]) for t, v in e["tables"].items()}
            exps[name] = ExperimentResult(name, tables, e["summary"], e["failures"])
        return cls(data["provenance"], exps)

    def to_json(self) -> str:
        return json.dumps(_jsonable(self.to_dict()), indent=2, sort_keys=True, allow_nan=False) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ReportBundle":
        return cls.from_dict(json.loads(text))

    def __eq__(self, other) -> bool:
        return isinstance(other, ReportBundle) and self.to_json() == other.to_json()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def _csv_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    text = str(v)
    if any(ch in text for ch in ',"\n'):
        text = '"' + text.replace('"', '""') + '"'
    return text


def csv_text(table: Table) -> str:
    lines = [",".join(table.columns)]
    lines += [",".join(_csv_cell(v) for v in row) for row in table.rows]
    return "\n".join(lines) + "\n"


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit(bundle: ReportBundle, out_dir: Path, formats=("csv", "json")) -> list[Path]:
    """Write every table as CSV and the bundle as ``report.json``.

    All contents are rendered first, so a rendering failure leaves no file.
    """
    files: list[tuple[Path, str]] = []
    if "csv" in formats:
        for e in bundle.experiments.values():
            for tname, tab in e.tables.items():
                files.append((out_dir / f"{tname}.csv", csv_text(tab)))
    if "json" in formats:
        files.append((out_dir / "report.json", bundle.to_json()))
    for path, text in files:
        try:
            _atomic_write(path, text)
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return [p for p, _ in files]


# --------------------------------------------------------------------------
# eigenvalue cache


class EigenCache:
    """Per ``(profile hash, mode)`` Dirichlet eigenvalue lists on disk.

    Entries are revalidated by :func:`itelab.spectra.scan_mode` before use.
    """

    def __init__(self, root: Path | None):
        self.root = root

    @classmethod
    def from_env(cls) -> "EigenCache":
        value = os.environ.get(CACHE_ENV)
        if value == "":
            return cls(None)
        if value is None:
            base = os.environ.get("XDG_CACHE_HOME") or os.path.join(os.path.expanduser("~"), ".cache")
            value = os.path.join(base, "itelab")
        return cls(Path(value))

    def _path(self, key: str, mode: int) -> Path:
        return self.root / key / f"mode_{mode}.json"

    def load(self, key: str, mode: int, lam_max: float) -> list[float] | None:
        if self.root is None:
            return None
        try:
            data = json.loads(self._path(key, mode).read_text(encoding="utf-8"))
        except (OSError, ValueError):
            return None
        if data.get("profile") != key or data.get("mode") != mode or data.get("lambda_max", -1) < lam_max:
            return None
        return [float(x) for x in data["eigenvalues"] if x <= lam_max]

    def store(self, key: str, mode: int, lam_max: float, values: list[float]) -> None:
        if self.root is None:
            return
        path = self._path(key, mode)
        try:
            old = json.loads(path.read_text(encoding="utf-8"))
            if old.get("lambda_max", -1) >= lam_max:
                return
        except (OSError, ValueError):
            pass
        body = {"profile": key, "mode": mode, "lambda_max": lam_max, "eigenvalues": [float(x) for x in values]}
        try:
            _atomic_write(path, json.dumps(body, sort_keys=True) + "\n")
        except OSError:
            pass  # a read-only cache only costs time


# --------------------------------------------------------------------------
# experiments


class _Context:
    def __init__(self, cfg: RunConfig, cache: EigenCache):
        self.cfg = cfg
        self.cache = cache
        self._survey = None
        self.cache_hits = 0

    def survey(self):
        from .spectra import mode_cutoff, survey

        if self._survey is None:
            cfg, p = self.cfg, self.cfg.profile
            key = p.key()
            L = mode_cutoff(p, cfg.lambda_max, cfg.cutoff_margin)
            known = {}
            for l in range(L + 1):
                vals = self.cache.load(key, l, cfg.lambda_max)
                if vals is not None:
                    known[l] = vals
            sv = survey(p, cfg.lambda_max, cfg.alpha, margin=cfg.cutoff_margin, dirichlet=known)
            for s in sv.scans:
                if s.reused:
                    self.cache_hits += 1
                else:
                    self.cache.store(key, s.l, cfg.lambda_max, s.dirichlet)
            self._survey = sv
        return self._survey


def _exp_ite_scan(ctx: _Context) -> ExperimentResult:
    sv = ctx.survey()
    res = ExperimentResult("ite-scan")
    rows = [[r.lambda_star, r.mode, r.multiplicity, r.singular, r.min_scattering_abs] for r in sv.records]
    res.tables["ite_scan"] = Table(["lambda_star", "mode", "multiplicity", "singular", "min_scattering_abs"], rows)
    res.summary.update(count=len(rows), alpha=sv.alpha, lambda_max=sv.lam_max, mode_cutoff=sv.cutoff)
    return res


def _exp_weyl_report(ctx: _Context) -> ExperimentResult:
    from .spectra import CountReport

    cfg = ctx.cfg
    sv = ctx.survey()
    res = ExperimentResult("weyl-report")
    lams = [cfg.lambda_max * (i + 1) / cfg.checkpoints for i in range(cfg.checkpoints)]
    lams = [x for x in lams if x > sv.alpha]
    cols = ["lambda"] + [k for k in CountReport.__dataclass_fields__ if k != "lam"]
    rows = []
    reports = []
    for lam in lams:
        rep = sv.report(lam, check=False)
        reports.append(rep)
        d = rep.as_dict()
        rows.append([d[c] for c in cols])
        res.check(f"accounting@{lam:.17g}", rep.accounting_ok, rep.N_minus - rep.N_minus_alpha,
                  rep.script_N0 + rep.script_Ninf, "N_-(lam) - N_-(alpha) must equal N0 + Ninf")
        res.check(f"weyl_bound@{lam:.17g}", rep.weyl_ok, rep.N_T, rep.weyl_bound, "N_T >= gamma (N_n - N_0) - N_-(alpha)")
        try:
            sv.check_tail(lam)
            tail_ok, detail = True, ""
        except CutoffError as exc:
            tail_ok, detail = False, str(exc)
        res.check(f"tail_positivity@{lam:.17g}", tail_ok, None, None, detail)
    res.tables["weyl_report"] = Table(cols, rows)
    bad = sv.pole_jump_violations()
    res.check("pole_jump_law", not bad, len(bad), 0, "; ".join(f"l={l} lam={e.lam:.17g}" for l, e in bad[:10]))
    bad2 = sv.common_pole_violations()
    res.check("common_pole_bound", not bad2, len(bad2), 0)
    if cfg.density_factor is not None and reports:
        last = reports[-1]
        need = cfg.density_factor * last.gamma * (last.V_n - last.V_0)
        res.check("transmission_density", last.N_T / last.lam >= need, last.N_T / last.lam, need)
    if reports:
        res.summary.update(V_n=reports[-1].V_n, V_0=reports[-1].V_0)
    res.summary["checkpoints"] = len(reports)
    return res


def _exp_branch_trace(ctx: _Context) -> ExperimentResult:
    from .spectra import branch_trace, default_alpha

    cfg = ctx.cfg
    p = cfg.profile
    alpha = cfg.alpha if cfg.alpha is not None else (ctx._survey.alpha if ctx._survey else default_alpha(p))
    res = ExperimentResult("branch-trace")
    ev_rows, sm_rows = [], []
    violations = 0
    for l in cfg.trace_modes:
        tr = branch_trace(p, l, alpha, cfg.lambda_max)
        for e in tr.events:
            ev_rows.append([l, e.lam, e.kind, e.crossing_sign, e.predicted, e.singular])
            if e.predicted is not None and e.crossing_sign != e.predicted:
                violations += 1
        sm_rows += [[l, float(a), float(b)] for a, b in tr.samples]
    res.tables["branch_events"] = Table(["mode", "lambda", "kind", "crossing_sign", "predicted", "singular"], ev_rows)
    res.tables["branch_samples"] = Table(["mode", "lambda", "mu"], sm_rows)
    res.check("pole_jump_law", violations == 0, violations, 0)
    res.summary.update(alpha=alpha, modes=list(cfg.trace_modes), events=len(ev_rows))
    return res


def _exp_identities(ctx: _Context) -> ExperimentResult:
    from .dtn import mode_frames

    cfg = ctx.cfg
    lo, hi, pts = cfg.identity_lambdas
    lams = np.linspace(lo, hi, pts)
    res = ExperimentResult("verify-identities")
    names = ["inverse_n", "inverse_0", "factorization", "corollary"]
    rows = []
    worst = dict.fromkeys(names + ["unitarity"], 0.0)
    for l in range(cfg.identity_modes + 1):
        for fr in mode_frames(cfg.profile, l, lams):
            r = fr.residuals()
            s = abs(abs(1.0 - 2j * math.pi * fr.a_l) - 1.0)
            rows.append([l, fr.lam] + [r.get(n) for n in names] + [s])
            for n in names:
                if n in r:
                    worst[n] = max(worst[n], r[n])
            worst["unitarity"] = max(worst["unitarity"], s)
    res.tables["identity_residuals"] = Table(["mode", "lambda"] + names + ["unitarity"], rows)
    tol = cfg.tolerances["identity"]
    for n in names:
        res.check(n, worst[n] <= tol, worst[n], tol)
    res.check("unitarity", worst["unitarity"] <= cfg.tolerances["unit_modulus"], worst["unitarity"], cfg.tolerances["unit_modulus"])
    res.summary.update(max_residual=max(worst[n] for n in names), max_by_identity=worst)
    return res


def _exp_symbol(ctx: _Context) -> ExperimentResult:
    from . import symbolcalc as sc

    cfg = ctx.cfg
    res = ExperimentResult("verify-symbol")
    e3 = sc.e_difference(3)
    e1 = sc.e_difference(1, parameterized=True)
    exp3 = sc.expected_e3_difference()
    exp1 = sc.expected_param_e1_difference(+1)
    shown1 = sc.expected_param_e1_difference(-1)
    res.tables["symbol_checks"] = Table(
        ["check", "computed", "expected", "match"],
        [
            ["E3_minus_E03", e3.pretty(), exp3.pretty(), e3 == exp3],
            ["param_E1_minus_E01", e1.pretty(), exp1.pretty(), e1 == exp1],
            ["param_E1_minus_E01_negated", e1.pretty(), shown1.pretty(), e1 == shown1],
        ],
    )
    res.check("E3_minus_E03", e3 == exp3, e3.pretty(), exp3.pretty())
    res.check("param_E1_minus_E01", e1 == exp1, e1.pretty(), exp1.pretty())
    res.summary["param_E1_sign"] = "+" if e1 == exp1 else ("-" if e1 == shown1 else "other")
    rows = sc.symbol_vs_numeric(cfg.profile, list(cfg.symbol_modes), cfg.symbol_lambda)
    res.tables["symbol_vs_numeric"] = Table(
        ["mode", "predicted_leading", "predicted_next", "measured", "error_leading", "error_next"],
        [[r.l, r.predicted_leading, r.predicted_next, r.measured, r.error_leading, r.error_next] for r in rows],
    )
    ratios_lead = [a.error_leading / b.error_leading for a, b in zip(rows, rows[1:])]
    ratios_next = [a.error_next / b.error_next for a, b in zip(rows, rows[1:])]
    res.summary.update(ratios_leading=ratios_lead, ratios_next=ratios_next)
    res.check("errors_decrease", all(r > 1 for r in ratios_lead + ratios_next), min(ratios_lead + ratios_next, default=None), 1.0)
    return res


def _exp_scattering(ctx: _Context) -> ExperimentResult:
    from .spectra import decade_check

    cfg = ctx.cfg
    sv = ctx.survey()
    res = ExperimentResult("scattering")
    rows = []
    worst_ratio = 0.0
    worst_s = 0.0
    for rec in sv.records:
        if rec.lambda_star > cfg.scattering_lambda_max or rec.singular:
            continue
        chk = decade_check(cfg.profile, rec)
        rows.append([rec.lambda_star, rec.mode, chk.abs_a, chk.median_abs_a, chk.ratio, chk.max_unitarity_error])
        worst_ratio = max(worst_ratio, chk.ratio)
        worst_s = max(worst_s, chk.max_unitarity_error)
    res.tables["scattering"] = Table(
        ["lambda_star", "mode", "abs_a", "median_abs_a", "ratio", "max_unitarity_error"], rows)
    res.check("nonscattering", worst_ratio <= cfg.tolerances["nonscattering"], worst_ratio, cfg.tolerances["nonscattering"])
    res.check("unitarity", worst_s <= cfg.tolerances["unit_modulus"], worst_s, cfg.tolerances["unit_modulus"])
    res.summary.update(count=len(rows), max_ratio=worst_ratio, max_unitarity_error=worst_s)
    return res


_RUNNERS = {
    "ite-scan": _exp_ite_scan,
    "branch-trace": _exp_branch_trace,
    "weyl-report": _exp_weyl_report,
    "verify-identities": _exp_identities,
    "verify-symbol": _exp_symbol,
    "scattering": _exp_scattering,
}


def run(cfg: RunConfig, cache: EigenCache | None = None) -> ReportBundle:
    """Execute the configured experiments; numerical errors propagate."""
    ctx = _Context(cfg, cache if cache is not None else EigenCache.from_env())
    results = {name: _RUNNERS[name](ctx) for name in cfg.experiments}
    provenance = {
        "artifact_version": __version__,
        "config_hash": cfg.digest,
        "profile_key": cfg.profile.key(),
        "profile": cfg.profile.to_dict(),
        "experiments": list(cfg.experiments),
    }
    return ReportBundle(provenance, results)


# --------------------------------------------------------------------------
# entry point


def _failure(out_dir: Path | None, code: int, kind: str, message: str, failures=()) -> int:
    record = {"exit_code": code, "kind": kind, "message": message, "failures": list(failures)}
    text = json.dumps(_jsonable(record), indent=2, sort_keys=True) + "\n"
    if out_dir is not None:
        try:
            _atomic_write(out_dir / "failure.json", text)
        except OSError:
            pass
    sys.stderr.write(text)
    return code


def _cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        return _failure(None, 2, "config", str(exc), [{"field": exc.field}])
    stale = cfg.output_dir / "failure.json"
    try:
        bundle = run(cfg)
    except ItelabError as exc:
        return _failure(cfg.output_dir, 3, "numerical", f"{type(exc).__name__}: {exc}")
    try:
        paths = emit(bundle, cfg.output_dir, cfg.formats)
    except OSError as exc:
        return _failure(None, 3, "io", str(exc))
    if bundle.failures:
        return _failure(cfg.output_dir, 1, "assertion", f"{len(bundle.failures)} check(s) failed", bundle.failures)
    if stale.exists():
        stale.unlink()
    for p in paths:
        print(p)
    return 0


def _cmd_oracle(args) -> int:
    from .oracle import FUNCTIONS

    fn = FUNCTIONS.get(args.function)
    if fn is None:
        sys.stderr.write(f"unknown oracle function {args.function!r}; choose from {sorted(FUNCTIONS)}\n")
        return 2
    try:
        if args.function == "j_zero":
            l, k = (int(a) for a in args.args)
            out = {"value": fn(l, k)}
        else:
            l, x = int(args.args[0]), float(args.args[1])
            v, d = fn(l, x)
            out = {"value": v, "derivative": d}
    except (ValueError, TypeError) as exc:
        sys.stderr.write(f"bad arguments for {args.function}: {exc}\n")
        return 2
    print(json.dumps({"function": args.function, "args": args.args, **out}, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="itelab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"itelab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run the experiments of a TOML config")
    p_run.add_argument("config")
    p_run.set_defaults(func=_cmd_run)
    p_or = sub.add_parser("oracle", help="extended-precision reference values (j, y, i, j_zero)")
    p_or.add_argument("function")
    p_or.add_argument("args", nargs=2, metavar="ARG", help="order and argument (or order and zero index)")
    p_or.set_defaults(func=_cmd_oracle)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
