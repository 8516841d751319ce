"""Robustness benchmark: embed per mode, attack, detect, and tabulate.

A run is described by a small declarative text file::

    # one clip per line: a WAV path or synth:STYLE:SEED[:SECONDS]
    clip = synth:light:101
    clip = synth:pop:202
    modes = EA, EC
    attack = none
    attack = awgn:55:seed=1
    attack = lowpass:8000 + requantize:8     # a chain
    payload_bits = 84

Repeated ``clip`` and ``attack`` keys accumulate.  Relative WAV paths are
resolved against the config file's directory.
"""
from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .attacks import apply_chain, parse_attack
from .core_signal import AudioClip, MAParams
from .corpus import synth_clip
from .detector import DetectParams, detect
from .embedder import DEFAULT_CALIBRATION, SMOOTHING_MODES, EmbedParams, FrameLayout, embed_frames, explain_params
from .errors import ExternalToolMissing, InvalidParameterError, MasyncError
from .metrics import exhaustive_search_cost, snr_measured, snr_predicted
from .sync_codes import BitSequence, parse_code
from .wavio import read_wav

log = logging.getLogger(__name__)


@dataclass
class BenchConfig:
    clips: list[str] = field(default_factory=list)
    modes: list[str] = field(default_factory=lambda: ["EA"])
    attacks: list[str] = field(default_factory=list)
    sync: str = "barker16"
    payload_bits: int = 84
    payload_seed: int = 1
    threshold: int | None = None
    a: int | None = None
    b: int | None = None
    strength: float | None = None
    t_n: int = 5
    calibration: list[str] = field(default_factory=lambda: list(DEFAULT_CALIBRATION))
    include_runtime: bool = False
    base_dir: str = "."

    def __post_init__(self):
        for m in self.modes:
            if m not in SMOOTHING_MODES:
                raise InvalidParameterError(f"unknown mode {m!r}; choose from {', '.join(SMOOTHING_MODES)}")
        for chain in self.attacks:
            for part in _split_chain(chain):
                parse_attack(part)
        parse_code(self.sync)
        if self.payload_bits < 0:
            raise InvalidParameterError("payload_bits must be >= 0")
        given = [v is not None for v in (self.a, self.b, self.strength)]
        if any(given) and not all(given):
            raise InvalidParameterError("give all of a, b and strength, or none of them")


_LIST_KEYS = {"clip": "clips", "attack": "attacks", "calibrate": "calibration"}
_INT_KEYS = {"payload_bits", "payload_seed", "threshold", "a", "b", "t_n"}


def parse_config(text: str, base_dir: str | Path = ".") -> BenchConfig:
    values: dict = {"base_dir": str(base_dir)}
    lists: dict[str, list[str]] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip().lower(), value.strip()
        if not sep or not key:
            raise InvalidParameterError(f"config line {lineno}: expected key = value")
        try:
            if key in _LIST_KEYS:
                lists.setdefault(_LIST_KEYS[key], []).append(value)
            elif key == "modes":
                values["modes"] = [m.strip().upper() for m in value.split(",") if m.strip()]
            elif key in _INT_KEYS:
                values[key] = int(value)
            elif key == "strength":
                values[key] = float(value)
            elif key == "sync":
                values[key] = value
            elif key == "include_runtime":
                values[key] = value.lower() in ("1", "true", "yes", "on")
            else:
                raise InvalidParameterError(f"unknown key {key!r}")
        except ValueError as exc:
            raise InvalidParameterError(f"config line {lineno}: {exc}") from exc
    values.update(lists)
    if "calibration" in lists and lists["calibration"] == ["none"]:
        values["calibration"] = []
    return BenchConfig(**values)


def load_config(path) -> BenchConfig:
    path = Path(path)
    return parse_config(path.read_text(), path.parent)


def _split_chain(chain: str) -> list[str]:
    return [p.strip() for p in chain.split("+") if p.strip()]


def load_clip(source: str, base_dir: str | Path = ".") -> AudioClip:
    if source.startswith("synth:"):
        parts = source.split(":")
        if len(parts) not in (3, 4):
            raise InvalidParameterError(f"synthetic clip spec is synth:STYLE:SEED[:SECONDS], got {source!r}")
        seconds = float(parts[3]) if len(parts) == 4 else 16.0
        return synth_clip(parts[1], int(parts[2]), seconds)
    path = Path(source)
    if not path.is_absolute():
        path = Path(base_dir) / path
    return read_wav(path)


@dataclass
class EvalRow:
    clip: str
    mode: str
    attack: str
    status: str = "ok"
    ne: int = 0
    nd: int | None = None
    snr_measured: float | None = None
    snr_predicted: float | None = None
    payload_ber: float | None = None
    ops: int | None = None
    a: int | None = None
    b: int | None = None
    s: float | None = None
    runtime: float | None = None

    @property
    def np_ratio(self) -> float | None:
        if self.nd is None or self.ne == 0:
            return None
        return self.nd / self.ne

    @property
    def ops_per_code(self) -> float | None:
        if self.ops is None or self.ne == 0:
            return None
        return self.ops / self.ne


@dataclass
class EvalReport:
    rows: list[EvalRow]
    config: BenchConfig
    sync_len: int
    errors: list[tuple[str, str]] = field(default_factory=list)

    def summary(self) -> list[tuple[str, str, int, int, float | None]]:
        """Per (mode, attack): totals of #NE and #ND over the clips that ran."""
        acc: dict[tuple[str, str], list[int]] = {}
        for r in self.rows:
            if r.status != "ok" or r.nd is None:
                continue
            t = acc.setdefault((r.mode, r.attack), [0, 0])
            t[0] += r.ne
            t[1] += r.nd
        return [(m, a, ne, nd, nd / ne if ne else None) for (m, a), (ne, nd) in acc.items()]

    def search_cost(self) -> dict[str, float]:
        n1, n2 = self.sync_len, self.config.payload_bits
        out: dict[str, float] = {k: float(v) for k, v in exhaustive_search_cost(n1, n2).items()}
        per = [r.ops_per_code for r in self.rows if r.attack == "none" and r.ops_per_code is not None]
        if per:
            out["ours"] = sum(per) / len(per)
        return out

    # -- serialization -------------------------------------------------

    def _row_fields(self, r: EvalRow) -> dict:
        d = {
            "clip": r.clip, "mode": r.mode, "attack": r.attack, "status": r.status,
            "a": r.a, "b": r.b, "s": r.s, "ne": r.ne,
            "snr_measured": r.snr_measured, "snr_predicted": r.snr_predicted,
        }
        if self.config.attacks:
            d.update(nd=r.nd, np=r.np_ratio, payload_ber=r.payload_ber, ops=r.ops)
        if self.config.include_runtime:
            d["runtime"] = r.runtime
        return d

    def to_json(self) -> str:
        cfg = asdict(self.config)
        cfg.pop("base_dir")
        doc = {
            "config": cfg,
            "odg": "n/a (out of scope)",
            "search_cost": self.search_cost(),
            "rows": [{k: _finite(v) for k, v in self._row_fields(r).items()} for r in self.rows],
            "summary": [{"mode": m, "attack": a, "ne": ne, "nd": nd, "np": p} for m, a, ne, nd, p in self.summary()],
            "errors": [{"clip": c, "error": e} for c, e in self.errors],
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    def to_text(self) -> str:
        cfg = self.config
        lines = [
            "report=masync-bench",
            "clips=" + ",".join(cfg.clips),
            "modes=" + ",".join(cfg.modes),
            "attacks=" + ",".join(cfg.attacks),
            f"sync={cfg.sync}",
            f"payload_bits={cfg.payload_bits}",
            "odg=n/a (out of scope)",
        ]
        for k, v in self.search_cost().items():
            lines.append(f"search_cost[{k}]={_fmt(v)}")
        for c, e in self.errors:
            lines.append(f"error[{c}]={e}")
        lines.append("")
        cols = list(self._row_fields(self.rows[0]).keys()) if self.rows else []
        table = [cols] + [[_fmt(v) for v in self._row_fields(r).values()] for r in self.rows]
        lines += _columns(table)
        if cfg.attacks:
            lines.append("")
            summary = [["mode", "attack", "ne", "nd", "np"]]
            summary += [[m, a, str(ne), str(nd), _fmt(p)] for m, a, ne, nd, p in self.summary()]
            lines += _columns(summary)
        return "\n".join(lines) + "\n"


def _fmt(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, float):
        if math.isinf(v):
            return "inf"
        return f"{v:.4f}"
    return str(v)


def _columns(table: list[list[str]]) -> list[str]:
    if not table:
        return []
    widths = [max(len(row[i]) for row in table) for i in range(len(table[0]))]
    return ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in table]


def _finite(v):
    """JSON has no infinity; identical signals are reported as the string "inf"."""
    if isinstance(v, float) and math.isinf(v):
        return "inf"
    return v


def run_benchmark(config: BenchConfig) -> EvalReport:
    code = parse_code(config.sync)
    payload = BitSequence.random(config.payload_bits, seed=config.payload_seed)
    layout = FrameLayout(code, payload)
    rows: list[EvalRow] = []
    errors: list[tuple[str, str]] = []

    for source in config.clips:
        try:
            clip = load_clip(source, config.base_dir)
            if config.a is not None:
                params = EmbedParams(MAParams(config.a, config.b), config.strength, config.t_n)
            else:
                params = explain_params(clip, config.calibration, t_n=config.t_n).params
        except (MasyncError, OSError) as exc:
            log.error("clip %s: %s", source, exc)
            errors.append((source, str(exc)))
            continue
        dparams = DetectParams(params.ma, params.s, code, threshold=config.threshold)
        for mode in config.modes:
            t0 = time.perf_counter()
            base = EvalRow(source, mode, "-", a=params.ma.a, b=params.ma.b, s=params.s)
            try:
                marked, record = embed_frames(clip, layout, params, mode)
            except MasyncError as exc:
                base.status = f"error: {exc}"
                rows.append(base)
                continue
            base.ne = record.codes_embedded
            base.snr_measured = snr_measured(clip, marked)
            base.snr_predicted = snr_predicted(clip, params.s)
            if not config.attacks:
                base.runtime = time.perf_counter() - t0
                rows.append(base)
                continue
            for chain in config.attacks:
                t1 = time.perf_counter()
                row = EvalRow(**{**asdict(base), "attack": chain})
                try:
                    attacked, labels = apply_chain(marked, _split_chain(chain))
                    row.attack = " + ".join(labels)
                    rep = detect(attacked, dparams, payload_len=config.payload_bits,
                                 reference=payload if config.payload_bits else None)
                except ExternalToolMissing as exc:
                    row.status = f"not run: {exc}"
                    rows.append(row)
                    continue
                except MasyncError as exc:
                    row.status = f"error: {exc}"
                    rows.append(row)
                    continue
                row.nd = rep.detected
                row.payload_ber = rep.payload_ber
                row.ops = rep.extraction_ops
                row.runtime = time.perf_counter() - t1
                rows.append(row)
    if not config.include_runtime:
        for r in rows:
            r.runtime = None
    return EvalReport(rows, config, len(code), errors)
