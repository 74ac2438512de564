"""Session and experiment configuration, plus the key = value config file.

Config file format: one ``key = value`` per line, ``#`` starts a comment,
blank lines are ignored.  Keys (all optional):

    message   bit string, e.g. 0110
    bits      message length n; random bits drawn per session
    attack    none | presence | weak | intercept
    q         measurement rate, float or comma list (sweep)
    eta       weak strength, float or comma list (sweep)
    transits  outbound | both
    alpha     test level in (0, 1)
    nmin      pairs before the frequency test starts
    policy    spending | uncorrected
    max_pairs stop a session after this many pairs (verdict Incomplete)
    payload_check  true | false
    delta     round spacing for timestamps
    t1        start time for timestamps
    sessions  number of sessions
    seed      unsigned 64-bit base seed
    workers   parallel worker processes
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

from ..adversary import AttackKind, AttackStrategy, TransitPolicy
from ..stats import CheckpointPolicy

MASK64 = (1 << 64) - 1
GOLDEN64 = 0x9E3779B97F4A7C15


class ConfigError(ValueError):
    """Invalid configuration; ``where`` names the field or file line."""

    def __init__(self, msg: str, where: str = ""):
        self.where = where
        super().__init__(f"{where}: {msg}" if where else msg)


def mix64(seed: int, index: int) -> int:
    """SplitMix64 output for state ``seed + (index + 1) * GOLDEN64`` (mod 2^64)."""
    z = (seed + (index + 1) * GOLDEN64) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def parse_bits(text: str) -> tuple[int, ...]:
    text = text.strip()
    if not text or any(ch not in "01" for ch in text):
        raise ConfigError(f"message must be a non-empty bit string, got {text!r}", "message")
    return tuple(int(ch) for ch in text)


@dataclass(frozen=True)
class SessionConfig:
    message: tuple[int, ...] = (0,)
    attack: AttackStrategy = field(default_factory=AttackStrategy.none)
    alpha: float = 0.01
    n_min: int = 8
    payload_check: bool = False
    delta: float = 1.0
    t1: float = 0.0
    policy: CheckpointPolicy = CheckpointPolicy.SPENDING
    max_pairs: int | None = None
    keep_rounds: bool = True

    def __post_init__(self):
        if len(self.message) < 1:
            raise ConfigError("message needs at least one bit", "message")
        if any(b not in (0, 1) for b in self.message):
            raise ConfigError("message bits must be 0 or 1", "message")
        if not 0 < self.alpha < 1:
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}", "alpha")
        if self.n_min < 1:
            raise ConfigError(f"nmin must be >= 1, got {self.n_min}", "nmin")
        if self.max_pairs is not None and self.max_pairs < 1:
            raise ConfigError(f"max_pairs must be >= 1, got {self.max_pairs}", "max_pairs")

    @property
    def n(self) -> int:
        return len(self.message)


@dataclass(frozen=True)
class ExperimentConfig:
    base: SessionConfig = field(default_factory=SessionConfig)
    num_sessions: int = 100
    seed: int = 0
    # when set, every session draws a fresh random message of this length
    random_bits: int | None = None
    sweep_q: tuple[float, ...] = ()
    sweep_eta: tuple[float, ...] = ()
    workers: int = 1

    def __post_init__(self):
        if self.num_sessions < 1:
            raise ConfigError("sessions must be >= 1", "sessions")
        if not 0 <= self.seed <= MASK64:
            raise ConfigError("seed must be an unsigned 64-bit integer", "seed")
        if self.random_bits is not None and self.random_bits < 1:
            raise ConfigError("bits must be >= 1", "bits")
        for name, vals in (("q", self.sweep_q), ("eta", self.sweep_eta)):
            for v in vals:
                if not 0 <= v <= 1:
                    raise ConfigError(f"{name} values must lie in [0, 1], got {v}", name)

    def attacks(self) -> list[AttackStrategy]:
        """The attack grid: the base attack with q and/or eta swept."""
        atk = self.base.attack
        qs = self.sweep_q or (atk.q,)
        etas = self.sweep_eta or (atk.eta,)
        if atk.kind is AttackKind.NONE:
            return [atk]
        return [replace(atk, q=q, eta=e) for q in qs for e in etas]


_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _floats(text: str, key: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise ConfigError(f"expected a number or comma list, got {text!r}", key) from None


def _int(text: str, key: str) -> int:
    try:
        return int(text, 0)
    except ValueError:
        raise ConfigError(f"expected an integer, got {text!r}", key) from None


def _float(text: str, key: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"expected a number, got {text!r}", key) from None


KEYS = (
    "message", "bits", "attack", "q", "eta", "transits", "alpha", "nmin",
    "policy", "max_pairs", "payload_check", "delta", "t1", "sessions", "seed", "workers",
)


def read_config_file(path) -> dict[str, str]:
    """Raw key -> value strings; errors name the file and line."""
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as e:
        raise ConfigError(f"cannot read config: {e.strerror}", str(path)) from None
    out = {}
    for no, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", f"{path}:{no}")
        key, val = (t.strip() for t in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"unknown key {key!r}", f"{path}:{no}")
        out[key] = val
    return out


def build_experiment(raw: dict[str, str]) -> ExperimentConfig:
    """ExperimentConfig from merged key -> string settings (file, then flags)."""
    kind_text = raw.get("attack", "none")
    try:
        kind = AttackKind(kind_text)
    except ValueError:
        raise ConfigError(
            f"unknown attack {kind_text!r}; choose from "
            + ", ".join(k.value for k in AttackKind), "attack") from None
    try:
        transits = TransitPolicy(raw.get("transits", "outbound"))
    except ValueError:
        raise ConfigError("transits must be 'outbound' or 'both'", "transits") from None
    try:
        policy = CheckpointPolicy(raw.get("policy", "spending"))
    except ValueError:
        raise ConfigError("policy must be 'spending' or 'uncorrected'", "policy") from None

    qs = _floats(raw["q"], "q") if "q" in raw else (1.0,)
    etas = _floats(raw["eta"], "eta") if "eta" in raw else (1.0,)
    for name, vals in (("q", qs), ("eta", etas)):
        if not vals:
            raise ConfigError("empty value list", name)
        for v in vals:
            if not 0 <= v <= 1:
                raise ConfigError(f"values must lie in [0, 1], got {v}", name)
    attack = AttackStrategy(kind, q=qs[0], eta=etas[0], transit_policy=transits)

    random_bits = None
    if "message" in raw and "bits" in raw:
        raise ConfigError("give either message or bits, not both", "message")
    if "message" in raw:
        message = parse_bits(raw["message"])
    else:
        random_bits = _int(raw.get("bits", "1"), "bits")
        if random_bits < 1:
            raise ConfigError("bits must be >= 1", "bits")
        message = (0,) * random_bits

    pc = raw.get("payload_check", "false").lower()
    if pc not in _TRUE | _FALSE:
        raise ConfigError(f"expected true/false, got {pc!r}", "payload_check")

    base = SessionConfig(
        message=message,
        attack=attack,
        alpha=_float(raw.get("alpha", "0.01"), "alpha"),
        n_min=_int(raw.get("nmin", "8"), "nmin"),
        payload_check=pc in _TRUE,
        delta=_float(raw.get("delta", "1.0"), "delta"),
        t1=_float(raw.get("t1", "0.0"), "t1"),
        policy=policy,
        max_pairs=_int(raw["max_pairs"], "max_pairs") if "max_pairs" in raw else None,
        keep_rounds=False,
    )
    return ExperimentConfig(
        base=base,
        num_sessions=_int(raw.get("sessions", "100"), "sessions"),
        seed=_int(raw.get("seed", "0"), "seed"),
        random_bits=random_bits,
        sweep_q=qs if len(qs) > 1 else (),
        sweep_eta=etas if len(etas) > 1 else (),
        workers=_int(raw.get("workers", "1"), "workers"),
    )
