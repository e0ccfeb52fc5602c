"""Experiment configuration: ``key = value`` text with ``[section]`` headers.

Recognized sections are graph, channels, noise, schedule, protocol, adversary,
seeds, thresholds, purify and secrecy. Command-line overrides
(``section.key=value``) win over file values.
"""

import configparser
import hashlib
from pathlib import Path

from .channels import PauliChannel
from .graph import GraphError, bits_to_int, graph_from_preset, parse_graph
from .protocols import AdversarySpec, ProtocolConfig, ProtocolError
from .recurrence import Schedule, scheme_name

SECTIONS = (
    "graph", "channels", "noise", "schedule", "protocol", "adversary", "seeds",
    "thresholds", "purify", "secrecy",
)


class ConfigError(ValueError):
    pass


class Config:
    def __init__(self, sections=None):
        self.sections = {s: dict(v) for s, v in (sections or {}).items()}
        unknown = set(self.sections) - set(SECTIONS)
        if unknown:
            raise ConfigError(f"unknown config sections: {sorted(unknown)}")

    def get(self, section, key, default=None, cast=str):
        raw = self.sections.get(section, {}).get(key)
        if raw is None or raw == "":
            return default
        try:
            return cast(raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{section}.{key}={raw!r}: {exc}") from None

    def get_bool(self, section, key, default=False):
        raw = self.get(section, key)
        if raw is None:
            return default
        low = raw.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{section}.{key}={raw!r} is not a boolean")

    def get_list(self, section, key, default=(), cast=str):
        raw = self.get(section, key)
        if raw is None:
            return list(default)
        try:
            return [cast(x.strip()) for x in raw.split(",") if x.strip()]
        except ValueError as exc:
            raise ConfigError(f"{section}.{key}={raw!r}: {exc}") from None

    def with_overrides(self, overrides):
        out = Config(self.sections)
        for item in overrides or ():
            key, sep, value = item.partition("=")
            section, dot, name = key.strip().partition(".")
            if not sep or not dot or not name:
                raise ConfigError(f"override {item!r} must look like section.key=value")
            if section not in SECTIONS:
                raise ConfigError(f"unknown config section {section!r}")
            out.sections.setdefault(section, {})[name.strip().lower()] = value.strip()
        return out

    def canonical_text(self):
        rows = []
        for section in sorted(self.sections):
            rows.append(f"[{section}]")
            for key in sorted(self.sections[section]):
                rows.append(f"{key} = {self.sections[section][key]}")
        return "\n".join(rows) + "\n"

    def digest(self):
        return hashlib.sha256(self.canonical_text().encode()).hexdigest()[:16]


def parse_config(text):
    parser = configparser.ConfigParser(
        interpolation=None, comment_prefixes=("#", ";"), inline_comment_prefixes=("#",)
    )
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    return Config({s: dict(parser[s]) for s in parser.sections()})


def load_config(path):
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    return parse_config(path.read_text())


def parse_seeds(text):
    """``"1,2,5-8"`` -> ``[1, 2, 5, 6, 7, 8]``."""
    out = []
    try:
        for part in str(text).split(","):
            part = part.strip()
            if not part:
                continue
            lo, dash, hi = part.partition("-")
            if dash:
                out.extend(range(int(lo), int(hi) + 1))
            else:
                out.append(int(part))
    except ValueError:
        raise ConfigError(f"bad seed list {text!r}") from None
    if not out:
        raise ConfigError("empty seed list")
    return out


def graph_from_spec(spec):
    try:
        return graph_from_preset(spec)
    except GraphError as exc:
        raise ConfigError(str(exc)) from None


def build_graph(cfg, key="preset", section="graph"):
    path = cfg.get(section, "file")
    try:
        if path and section == "graph":
            p = Path(path)
            if not p.is_file():
                raise ConfigError(f"graph file not found: {p}")
            return parse_graph(p.read_text())
        return graph_from_preset(cfg.get(section, key, "ghz:3"))
    except GraphError as exc:
        raise ConfigError(str(exc)) from None


def channel_from_spec(spec):
    """``identity``, ``depolarizing:p``, ``dephasing:p`` or ``probs:pI,pX,pY,pZ``."""
    kind, _, arg = str(spec).partition(":")
    kind = kind.strip().lower()
    try:
        if kind == "identity":
            return PauliChannel.identity()
        if kind == "depolarizing":
            return PauliChannel.depolarizing(float(arg))
        if kind == "dephasing":
            return PauliChannel.dephasing(float(arg))
        if kind == "probs":
            return PauliChannel(tuple(float(x) for x in arg.split(",")))
    except ValueError as exc:
        raise ConfigError(f"bad channel {spec!r}: {exc}") from None
    raise ConfigError(f"unknown channel {spec!r}")


def _channel_from_keys(party, keys):
    """``preset`` with ``p``, or ``preset = custom`` with ``p_i, p_x, p_y, p_z``."""
    preset = keys.pop("preset", None)
    letters = [keys.pop(k, None) for k in ("p_i", "p_x", "p_y", "p_z")]
    p = keys.pop("p", None)
    if keys:
        raise ConfigError(f"unknown channel keys for {party}: {sorted(keys)}")
    if preset is None:
        preset = "custom" if any(v is not None for v in letters) else "identity"
    if preset == "custom":
        if any(v is None for v in letters):
            raise ConfigError(f"custom channel for {party} needs p_i, p_x, p_y and p_z")
        return channel_from_spec("probs:" + ",".join(letters))
    if preset == "identity":
        return channel_from_spec("identity")
    if p is None:
        raise ConfigError(f"channel preset {preset!r} for {party} needs p")
    return channel_from_spec(f"{preset}:{p}")


def build_channels(cfg, g):
    """Channel for every party.

    ``default`` (or ``all.*`` keys) sets every party; ``party.<k> = <spec>`` or
    ``<k>.preset`` / ``<k>.p`` / ``<k>.p_i``.. override single parties. A spec
    is ``identity``, ``depolarizing:p``, ``dephasing:p`` or ``probs:pI,pX,pY,pZ``.
    """
    section = cfg.sections.get("channels", {})
    grouped = {}
    specs = {}
    for key, value in section.items():
        if key == "default":
            specs["all"] = value
            continue
        head, dot, tail = key.partition(".")
        if not dot:
            raise ConfigError(f"unknown channels key {key!r}")
        if head == "party":
            specs[tail] = value
        else:
            grouped.setdefault(head, {})[tail] = value
    parties = {}
    for name, value in specs.items():
        parties[name] = channel_from_spec(value)
    for name, keys in grouped.items():
        if name in parties:
            raise ConfigError(f"channel for {name} given twice")
        parties[name] = _channel_from_keys(name, dict(keys))
    channels = [parties.pop("all", PauliChannel.identity())] * g.n_vertices
    for name, ch in parties.items():
        try:
            k = int(name)
        except ValueError:
            raise ConfigError(f"bad party index {name!r}") from None
        if not 1 <= k <= g.n_vertices:
            raise ConfigError(f"party {k} out of range 1..{g.n_vertices}")
        channels[k - 1] = ch
    return channels


def build_schedule(cfg, default_rounds=2):
    seq = cfg.get_list("schedule", "sequence", ("P1", "P2"))
    try:
        return Schedule(tuple(seq), cfg.get("schedule", "rounds", default_rounds, int))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def build_mu(cfg, g):
    raw = cfg.get("protocol", "mu")
    if raw is None:
        return 0
    try:
        mu = bits_to_int(raw)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if len(raw.strip()) != g.n_vertices:
        raise ConfigError(f"protocol.mu must have {g.n_vertices} bits")
    return mu


def build_adversary(cfg):
    try:
        return AdversarySpec(
            cfg.get("adversary", "kind", "none"),
            cfg.get("adversary", "factor", 1.0, float),
            cfg.get("adversary", "min_degree", 0, int),
            cfg.get("adversary", "start", 0, int),
        )
    except ProtocolError as exc:
        raise ConfigError(str(exc)) from None


def noise_q(cfg):
    q = cfg.get("noise", "q", 1.0, float)
    if not 0 <= q <= 1:
        raise ConfigError(f"noise.q must lie in [0, 1], got {q}")
    return q


def build_protocol_config(cfg, seed, g=None):
    g = g or build_graph(cfg)
    try:
        return ProtocolConfig(
            graph=g,
            mu=build_mu(cfg, g),
            copies=cfg.get("protocol", "copies", 16, int),
            channels=tuple(build_channels(cfg, g)),
            q=noise_q(cfg),
            schedule=build_schedule(cfg),
            seed=seed,
            secret_position=cfg.get("protocol", "secret_position", None, int),
            probe_fraction=cfg.get("protocol", "probe_fraction", 0.1, float),
            adversary=build_adversary(cfg),
            epsilon=cfg.get("protocol", "epsilon", 0.05, float),
            blind=cfg.get_bool("protocol", "blind", True),
            leak_success=cfg.get_bool("protocol", "leak_success", False),
            decoys=tuple(graph_from_spec(x) for x in cfg.get_list("protocol", "decoys")),
        )
    except (ProtocolError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def protocol_scheme(cfg):
    try:
        return scheme_name(cfg.get("protocol", "scheme", "ii"))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
