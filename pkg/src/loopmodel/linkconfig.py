"""Link configurations: time-stamped crosses and double bars on torus edges.

A configuration is a finite set of links, each a triple (edge, time, kind)
with time in [0, beta) on the time circle and kind one of CROSS / DBAR.
Storage is redundant on purpose: per-edge sorted time lists drive the loop
machinery and serialization, per-site sorted incident lists drive loop
traversal (a site's incident links delimit its maximal vertical intervals).

Times at the same site must be pairwise distinct: coincident incident times
are a probability-zero event under the Poisson law and the loop connectivity
is not defined for them, so `insert` rejects collisions outright instead of
imposing an arbitrary tie-break.
"""

import bisect
import math

from .geometry import build_geometry

CROSS = 0
DBAR = 1

KIND_NAMES = {CROSS: "cross", DBAR: "dbar"}
KIND_VALUES = {"cross": CROSS, "dbar": DBAR}


class ConfigurationError(ValueError):
    pass


class LinkConfiguration:
    def __init__(self, geom):
        self.geom = geom
        self.edge_times = [[] for _ in range(geom.n_edges)]
        self.edge_kinds = [[] for _ in range(geom.n_edges)]
        self.site_times = [[] for _ in range(geom.n_vertices)]
        self.site_edges = [[] for _ in range(geom.n_vertices)]
        self.n_links = 0

    # ---- queries -------------------------------------------------------

    def links(self):
        """All links as (edge, time, kind), grouped by edge, time-ordered."""
        for eid in range(self.geom.n_edges):
            for t, kind in zip(self.edge_times[eid], self.edge_kinds[eid]):
                yield eid, t, kind

    def links_time_ordered(self):
        out = list(self.links())
        out.sort(key=lambda z: (z[1], z[0]))
        return out

    def kind_at(self, eid, t):
        i = self._edge_index(eid, t)
        return self.edge_kinds[eid][i]

    def has_link(self, eid, t):
        times = self.edge_times[eid]
        i = bisect.bisect_left(times, t)
        return i < len(times) and times[i] == t

    def cross_count(self):
        return sum(kinds.count(CROSS) for kinds in self.edge_kinds)

    # ---- mutation --------------------------------------------------------

    def insert(self, eid, t, kind):
        if not (0.0 <= t < self.geom.beta):
            raise ConfigurationError(f"time {t!r} outside [0, beta)")
        if kind not in (CROSS, DBAR):
            raise ConfigurationError(f"bad link kind {kind!r}")
        a, b = self.geom.edge_endpoints[eid]
        for v in (a, b):
            st = self.site_times[v]
            i = bisect.bisect_left(st, t)
            if i < len(st) and st[i] == t:
                raise ConfigurationError(
                    f"time collision at site {v}: a link at t={t!r} already exists")
        i = bisect.bisect_left(self.edge_times[eid], t)
        self.edge_times[eid].insert(i, t)
        self.edge_kinds[eid].insert(i, kind)
        for v in (a, b):
            j = bisect.bisect_left(self.site_times[v], t)
            self.site_times[v].insert(j, t)
            self.site_edges[v].insert(j, eid)
        self.n_links += 1

    def remove(self, eid, t):
        i = self._edge_index(eid, t)
        kind = self.edge_kinds[eid][i]
        del self.edge_times[eid][i]
        del self.edge_kinds[eid][i]
        for v in self.geom.edge_endpoints[eid]:
            j = bisect.bisect_left(self.site_times[v], t)
            assert self.site_times[v][j] == t and self.site_edges[v][j] == eid
            del self.site_times[v][j]
            del self.site_edges[v][j]
        self.n_links -= 1
        return kind

    def flip(self, eid, t):
        i = self._edge_index(eid, t)
        self.edge_kinds[eid][i] ^= 1
        return self.edge_kinds[eid][i]

    def _edge_index(self, eid, t):
        times = self.edge_times[eid]
        i = bisect.bisect_left(times, t)
        if i >= len(times) or times[i] != t:
            raise ConfigurationError(f"no link on edge {eid} at t={t!r}")
        return i

    # ---- misc ---------------------------------------------------------

    def copy(self):
        out = LinkConfiguration(self.geom)
        out.edge_times = [list(v) for v in self.edge_times]
        out.edge_kinds = [list(v) for v in self.edge_kinds]
        out.site_times = [list(v) for v in self.site_times]
        out.site_edges = [list(v) for v in self.site_edges]
        out.n_links = self.n_links
        return out

    def __eq__(self, other):
        return (isinstance(other, LinkConfiguration)
                and self.geom == other.geom
                and self.edge_times == other.edge_times
                and self.edge_kinds == other.edge_kinds)

    def __repr__(self):
        return f"LinkConfiguration({self.geom!r}, n_links={self.n_links})"


def empty_configuration(geom):
    return LinkConfiguration(geom)


def sample_poisson(geom, u, intensity_scale, rng):
    """Draw the base point process: independent Poisson crosses and bars.

    Each edge carries Poisson(beta*scale*u) crosses and
    Poisson(beta*scale*(1-u)) double bars with i.i.d. uniform times.
    intensity_scale=1 is the reference measure the sampler reweights.
    """
    if not (0.0 <= u <= 1.0):
        raise ConfigurationError(f"u must lie in [0, 1], got {u}")
    if intensity_scale <= 0:
        raise ConfigurationError("intensity_scale must be positive")
    config = LinkConfiguration(geom)
    beta = geom.beta
    for eid in range(geom.n_edges):
        for kind, rate in ((CROSS, u), (DBAR, 1.0 - u)):
            lam = beta * intensity_scale * rate
            for _ in range(poisson_variate(lam, rng)):
                while True:
                    t = rng.random() * beta
                    try:
                        config.insert(eid, t, kind)
                        break
                    except ConfigurationError:
                        continue   # same-site time collision, probability ~0
    return config


def poisson_variate(lam, rng):
    """Poisson sample via Knuth's product method, chunked for large means."""
    if lam < 0:
        raise ConfigurationError("Poisson mean must be >= 0")
    total = 0
    while lam > 500.0:
        total += poisson_variate(lam / 2.0, rng)
        lam /= 2.0
    limit = math.exp(-lam)
    acc = rng.random()
    while acc >= limit:
        total += 1
        acc *= rng.random()
    return total


# ---- canonical text serialization --------------------------------------

HEADER_PREFIX = "# loopmodel configuration"


def serialize(config):
    geom = config.geom
    lines = [HEADER_PREFIX,
             f"d={geom.d} k={','.join(str(v) for v in geom.k)} beta={geom.beta!r}"]
    for eid, t, kind in config.links_time_ordered():
        a, b = geom.edge_canonical[eid]
        lines.append(f"{a} {b} {t!r} {KIND_NAMES[kind]}")
    return "\n".join(lines) + "\n"


def deserialize(text, geom=None):
    lines = text.splitlines()
    if not lines or not lines[0].startswith(HEADER_PREFIX):
        raise ConfigurationError("line 1: missing configuration header")
    header = _parse_header(lines[1] if len(lines) > 1 else "")
    file_geom = build_geometry(header["d"], header["k"], header["beta"])
    if geom is not None and geom != file_geom:
        raise ConfigurationError(
            f"header geometry {file_geom!r} does not match expected {geom!r}")
    config = LinkConfiguration(geom if geom is not None else file_geom)
    for ln, line in enumerate(lines[2:], start=3):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 4:
            raise ConfigurationError(f"line {ln}: expected 'u v time kind', got {line!r}")
        try:
            a, b = int(parts[0]), int(parts[1])
            t = float(parts[2])
        except ValueError as exc:
            raise ConfigurationError(f"line {ln}: {exc}") from exc
        if parts[3] not in KIND_VALUES:
            raise ConfigurationError(f"line {ln}: unknown link kind {parts[3]!r}")
        try:
            eid = config.geom.edge_between(a, b)
            config.insert(eid, t, KIND_VALUES[parts[3]])
        except (ValueError, IndexError) as exc:
            raise ConfigurationError(f"line {ln}: {exc}") from exc
    return config


def _parse_header(line):
    fields = {}
    for token in line.split():
        if "=" not in token:
            raise ConfigurationError(f"line 2: malformed header token {token!r}")
        key, val = token.split("=", 1)
        fields[key] = val
    try:
        return {
            "d": int(fields["d"]),
            "k": tuple(int(v) for v in fields["k"].split(",")),
            "beta": float(fields["beta"]),
        }
    except (KeyError, ValueError) as exc:
        raise ConfigurationError(f"line 2: bad header ({exc})") from exc
