"""Deterministic, seeded generator of synthetic configurations with a
planted global frequency, plus the exact re-verification audit.

Frequencies are planted as  alpha_x = a_x * W / q* + T* / x  where W is the
product of the witness prime pool: with that carrier, a congruence
p*a_i = q*a_j (mod q*) makes the rational part of p*alpha_i - q*alpha_j an
integer multiple of every witness prime at once, so edge consistency is
decided by the archimedean part alone.  Every emitted edge is verified
against both thresholds exactly; nothing about an instance is sampled
without being re-checked.
"""
from __future__ import annotations

import json
import random
from bisect import bisect_left, insort
from dataclasses import dataclass, field
from fractions import Fraction
from math import exp, gcd, log, sqrt

from .pathgraph import Configuration, Edge, Site, route_count_gate_max_k
from .primes import inv_mod, primes_in_range, prod
from .torus import Rational, as_fraction, frac_to_str, norm_mod, str_to_frac

SCHEMA_VERSION = 1


class ParamsError(ValueError):
    pass


class InfeasibleParamsError(RuntimeError):
    """The candidate space cannot supply the requested instance."""


@dataclass(frozen=True)
class Params:
    """Generator scales and thresholds.

    X, H, K, P, P_prime fix the interval geometry (sites live in
    [X/(10K), 2X/K], separated by H/K) and the two prime pools [P, 2P]
    and [P', 2P'] with P * P' = K.  eps_edge and s_edge are the frequency
    and physical edge thresholds.  The remaining fields are free dials:
    edge_count (None = keep every verifying candidate), witness_density
    (minimum fraction of the witness pool an edge must carry),
    noise_level (bounded rational jitter in units of eps_edge), placement
    ("uniform", or "web" to seed multiplicative clusters that guarantee
    multi-step routes at desk scale), and the web_* knobs.  Under "web",
    site_count is a lower bound: planted cluster sites are never trimmed.
    """

    X: int
    H: int
    K: int
    P: int
    P_prime: int
    eps_edge: Fraction
    s_edge: Fraction
    site_count: int
    edge_count: int | None = None
    witness_density: Fraction = Fraction(0)
    noise_level: Fraction = Fraction(0)
    d_min: int = 1
    k_max: int = 4
    B_ratio: Fraction = Fraction(1)
    c_cal: Fraction = Fraction(1)
    seed: int = 0
    placement: str = "uniform"
    web_pair_targets: int = 0
    web_diamonds: int = 0
    web_chains: int = 0
    web_chain_len: int = 0

    def __post_init__(self) -> None:
        for name in ("eps_edge", "s_edge", "witness_density", "noise_level",
                     "B_ratio", "c_cal"):
            object.__setattr__(self, name, as_fraction(getattr(self, name)))
        for name in ("X", "H", "K", "P", "P_prime", "site_count"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise ParamsError(f"{name} must be a positive integer, got {v!r}")
        if self.P * self.P_prime != self.K:
            raise ParamsError(
                f"P * P' must equal K: {self.P} * {self.P_prime} != {self.K}"
            )
        if 2 * self.P_prime >= self.P:
            raise ParamsError("prime pools [P', 2P'] and [P, 2P] must be disjoint")
        if not 0 < self.eps_edge or 2 * self.eps_edge >= 1:
            raise ParamsError(f"need 0 < eps_edge < 1/2, got {self.eps_edge}")
        if self.s_edge <= 0:
            raise ParamsError("s_edge must be positive")
        if not 0 <= self.witness_density <= 1:
            raise ParamsError("witness_density must lie in [0, 1]")
        if self.noise_level < 0:
            raise ParamsError("noise_level must be nonnegative")
        if self.d_min < 0 or self.k_max < 1:
            raise ParamsError("need d_min >= 0 and k_max >= 1")
        if self.B_ratio <= 0 or self.c_cal <= 0:
            raise ParamsError("B_ratio and c_cal must be positive")
        if self.edge_count is not None and self.edge_count < 0:
            raise ParamsError("edge_count must be None or nonnegative")
        if self.placement not in ("uniform", "web"):
            raise ParamsError(f"unknown placement {self.placement!r}")
        if not self.edge_primes():
            raise ParamsError(f"no primes in [{self.P}, {2 * self.P}]")
        if not self.witness_primes():
            raise ParamsError(f"no primes in [{self.P_prime}, {2 * self.P_prime}]")
        if self.slot_count() + 1 < self.site_count:
            raise ParamsError(
                f"interval holds at most {self.slot_count() + 1} separated sites,"
                f" {self.site_count} requested"
            )

    @property
    def separation(self) -> Fraction:
        return Fraction(self.H, self.K)

    @property
    def site_lo(self) -> Fraction:
        return Fraction(self.X, 10 * self.K)

    @property
    def site_hi(self) -> Fraction:
        return Fraction(2 * self.X, self.K)

    def slot_count(self) -> int:
        return int((self.site_hi - self.site_lo) / self.separation)

    def edge_primes(self) -> tuple[int, ...]:
        return tuple(primes_in_range(self.P, 2 * self.P))

    def witness_primes(self) -> tuple[int, ...]:
        return tuple(primes_in_range(self.P_prime, 2 * self.P_prime))

    def witness_carrier(self) -> int:
        return prod(self.witness_primes())

    def split_partition(self) -> tuple[frozenset[int], frozenset[int]]:
        ps = self.edge_primes()
        half = (len(ps) + 1) // 2
        return frozenset(ps[:half]), frozenset(ps[half:])

    def min_witness(self) -> int:
        pool = len(self.witness_primes())
        want = self.witness_density * pool
        return max(1, -(-want.numerator // want.denominator))

    def route_gate_k(self) -> int:
        return route_count_gate_max_k(self.X, self.H, 2 * self.P, self.B_ratio)

    def gates(self) -> dict:
        """Which asymptotic hypotheses hold at this scale (report only)."""
        x, h = self.X, self.H
        h_floor = exp(sqrt(log(x) * log(max(log(x), 2.0)))) if x > 2 else 0.0
        return {
            "h_range": h >= h_floor,
            "h_le_sqrt_x": h * h <= x,
            "eps_scale_ok": self.eps_edge <= Fraction(2 * self.P * self.K, h),
            "route_count_gate_max_k": self.route_gate_k(),
        }

    def to_json(self) -> dict:
        out = {}
        for name in self.__dataclass_fields__:
            v = getattr(self, name)
            out[name] = frac_to_str(v) if isinstance(v, Fraction) else v
        return out

    @classmethod
    def from_json(cls, doc: dict) -> "Params":
        kwargs = dict(doc)
        for name, fld in cls.__dataclass_fields__.items():
            if name in kwargs and fld.type == "Fraction" and isinstance(
                kwargs[name], str
            ):
                kwargs[name] = str_to_frac(kwargs[name])
        return cls(**kwargs)


@dataclass(frozen=True)
class GroundTruth:
    """The planted structure: alpha_x = a_x * carrier / q_star + T_star / x."""

    mode: str
    t_star: Fraction
    q_star: int
    carrier: int
    a_map: dict[int, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "t_star", as_fraction(self.t_star))
        if self.mode not in ("archimedean", "rational"):
            raise ParamsError(f"unknown truth mode {self.mode!r}")
        if self.q_star < 1 or self.carrier < 1:
            raise ParamsError("q_star and carrier must be positive")
        if self.mode == "archimedean" and self.q_star != 1:
            raise ParamsError("archimedean mode requires q_star = 1")
        for idx, a in self.a_map.items():
            if not 0 <= a < self.q_star:
                raise ParamsError(f"residue a[{idx}] = {a} outside [0, {self.q_star})")

    def planted_alpha(self, site_index: int, x: Fraction) -> Fraction:
        a = self.a_map.get(site_index, 0)
        return Fraction(a * self.carrier, self.q_star) + self.t_star / x

    def to_json(self) -> dict:
        return {
            "mode": self.mode,
            "t_star": frac_to_str(self.t_star),
            "q_star": self.q_star,
            "carrier": self.carrier,
            "a_map": {str(k): v for k, v in sorted(self.a_map.items())},
        }

    @classmethod
    def from_json(cls, doc: dict) -> "GroundTruth":
        return cls(
            mode=doc["mode"],
            t_star=str_to_frac(doc["t_star"]),
            q_star=doc["q_star"],
            carrier=doc["carrier"],
            a_map={int(k): v for k, v in doc["a_map"].items()},
        )


@dataclass(frozen=True)
class Instance:
    cfg: Configuration
    edges: tuple[Edge, ...]
    truth: GroundTruth | None
    params: Params

    def strip_truth(self) -> "Instance":
        return Instance(self.cfg, self.edges, None, self.params)


def _try_place(placed: list[Fraction], x: Fraction, lo, hi, sep) -> bool:
    if not lo <= x <= hi:
        return False
    pos = bisect_left(placed, x)
    if pos > 0 and x - placed[pos - 1] < sep:
        return False
    if pos < len(placed) and placed[pos] - x < sep:
        return False
    insort(placed, x)
    return True


def _route_pair_candidates(
    params: Params, q_star: int, max_out: int
) -> list[tuple[tuple[int, int, int, int], tuple[int, int, int, int], Fraction]]:
    """Pairs of two-step split routes with disjoint primes and nearly equal
    ratio products, ascending by ratio gap.

    In rational mode only cycle-consistent pairs are kept (the congruence
    multipliers around the closing loop multiply to 1 mod q_star), so the
    planted residues verify on the closing edge as well.
    """
    p1s, p2s = (sorted(s) for s in params.split_partition())
    routes = []
    for pa in p1s:
        for pb in p1s:
            if pb == pa:
                continue
            for qa in p2s:
                for qb in p2s:
                    if qb == qa:
                        continue
                    routes.append(
                        (Fraction(qa * qb, pa * pb), (pa, qa, pb, qb))
                    )
    routes.sort()
    out = []
    for i, (r1, t1) in enumerate(routes):
        for j in range(i + 1, min(i + 40, len(routes))):
            r2, t2 = routes[j]
            if set(t1) & set(t2):
                continue
            if q_star > 1:
                pa, qa, pb, qb = t1
                pc, qc, pd, qd = t2
                if (qa * qb * pc * pd - qc * qd * pa * pb) % q_star != 0:
                    continue
            out.append((t1, t2, r2 - r1))
    out.sort(key=lambda t: (t[2], t[0], t[1]))
    return out[:max_out]


def _place_sites(params: Params, rng: random.Random, q_star: int) -> list[Fraction]:
    lo, hi, sep = params.site_lo, params.site_hi, params.separation
    placed: list[Fraction] = []
    if params.placement == "web":
        hub = lo
        while not _try_place(placed, hub, lo, hi, sep):
            hub += sep
        p1s, p2s = (sorted(s) for s in params.split_partition())
        pairs = _route_pair_candidates(params, q_star, 4 * params.web_pair_targets)
        planted_pairs = 0
        for t1, t2, _gap in pairs:
            if planted_pairs >= params.web_pair_targets:
                break
            pa, qa, pb, qb = t1
            pc, qc, pd, qd = t2
            z1 = hub * Fraction(qa, pa)
            y = z1 * Fraction(qb, pb)
            z2 = hub * Fraction(qc, pc)
            # closing edge z2 -> y through (pd, qd) must satisfy the
            # physical threshold: |z2 * qd/pd - y| <= qd * s_edge
            if abs(z2 * Fraction(qd, pd) - y) > qd * params.s_edge:
                continue
            snapshot = list(placed)
            if all(_try_place(placed, v, lo, hi, sep) for v in (z1, y, z2)):
                planted_pairs += 1
            else:
                placed[:] = snapshot
        for _ in range(params.web_diamonds):
            base_slot = rng.randrange(max(1, params.slot_count() // 3))
            base = lo + base_slot * sep
            pa, pb = rng.sample(p1s, 2)
            qa, qb = rng.sample(p2s, 2)
            z1 = base * Fraction(qa, pa)
            z2 = base * Fraction(qb, pb)
            y = base * Fraction(qa * qb, pa * pb)
            snapshot = list(placed)
            if not all(_try_place(placed, v, lo, hi, sep) for v in (base, z1, z2, y)):
                placed[:] = snapshot
        for _ in range(params.web_chains):
            # start near the interval floor so long chains fit below the roof
            start_slot = rng.randrange(max(1, params.slot_count() // 20))
            cur = lo + start_slot * sep
            if not _try_place(placed, cur, lo, hi, sep):
                continue
            used: set[int] = set()
            for _step in range(params.web_chain_len):
                avail1 = [p for p in p1s if p not in used]
                avail2 = [q for q in p2s if q not in used]
                if not avail1 or not avail2:
                    break
                smallest = sorted(
                    (Fraction(q, p), p, q) for p in avail1 for q in avail2
                )[:3]
                _, p, q = smallest[rng.randrange(len(smallest))]
                nxt = cur * Fraction(q, p)
                if not _try_place(placed, nxt, lo, hi, sep):
                    break
                used.update((p, q))
                cur = nxt
    need = params.site_count - len(placed)
    if need > 0:
        n_slots = params.slot_count() + 1
        tries = min(n_slots, max(4 * need + 16, need))
        for slot in rng.sample(range(n_slots), tries):
            if need == 0:
                break
            if _try_place(placed, lo + slot * sep, lo, hi, sep):
                need -= 1
        if need > 0:
            raise InfeasibleParamsError(
                f"could not place {params.site_count} separated sites"
            )
    # web placement may overshoot site_count; planted sites are never trimmed,
    # so site_count is a lower bound under placement="web"
    return placed


def _physical_candidates(
    params: Params, xs: list[Fraction]
) -> list[tuple[int, int, int, int, Fraction]]:
    """All (i, j, p, q, slack) with j the site nearest x_i * q/p passing the
    physical threshold; ties toward the smaller site."""
    p1s, p2s = (sorted(s) for s in params.split_partition())
    out = []
    for i, x in enumerate(xs):
        for p in p1s:
            for q in p2s:
                target = x * Fraction(q, p)
                pos = bisect_left(xs, target)
                best = None
                for j in (pos - 1, pos):
                    if 0 <= j < len(xs) and j != i:
                        d = abs(xs[j] - target)
                        if best is None or d < abs(xs[best] - target):
                            best = j
                if best is None:
                    continue
                slack = abs(x / p - xs[best] / q)
                if slack <= params.s_edge:
                    out.append((i, best, p, q, slack))
    return out


def _propagate_residues(
    n_sites: int,
    candidates: list[tuple[int, int, int, int, Fraction]],
    q_star: int,
    a_root: int,
) -> dict[int, int]:
    """Assign residues along a spanning forest of the candidate adjacency so
    that every tree edge satisfies p * a_i = q * a_j (mod q_star)."""
    adj: dict[int, list[tuple[int, int, int]]] = {i: [] for i in range(n_sites)}
    seen_pairs = set()
    for i, j, p, q, _slack in candidates:
        if (i, j) in seen_pairs:
            continue
        seen_pairs.add((i, j))
        adj[i].append((j, p, q))
        adj[j].append((i, q, p))  # traversing backwards swaps the roles
    if gcd(a_root, q_star) != 1:
        a_root = 1
    a: dict[int, int] = {}
    for root in range(n_sites):
        if root in a:
            continue
        a[root] = a_root % q_star if q_star > 1 else 0
        queue = [root]
        while queue:
            u = queue.pop(0)
            for v, pu, qv in adj[u]:
                if v in a:
                    continue
                # edge u -> v labelled (pu, qv): a_v = qv^{-1} * pu * a_u
                a[v] = (inv_mod(qv, q_star) * pu * a[u]) % q_star if q_star > 1 else 0
                queue.append(v)
    return a


def gen_instance(
    params: Params,
    mode: str = "archimedean",
    t_star: Rational = 0,
    q_star: int = 1,
    a_root: int = 1,
) -> Instance:
    """Generate a verified instance: separated sites, planted frequencies,
    and edges that pass both thresholds exactly.

    Deterministic for fixed (params, seed).  Raises InfeasibleParamsError
    when a requested edge_count cannot be met after exhausting every
    candidate (site, p, q) triple.
    """
    if mode == "archimedean":
        q_star = 1
    elif mode != "rational":
        raise ParamsError(f"unknown mode {mode!r}")
    pool_w = params.witness_primes()
    pool_pq = params.edge_primes()
    for p in pool_pq + pool_w:
        if gcd(p, q_star) != 1:
            raise ParamsError(f"q_star = {q_star} shares a factor with pool prime {p}")
    rng = random.Random(params.seed)
    xs = _place_sites(params, rng, q_star)
    candidates = _physical_candidates(params, xs)
    if mode == "rational":
        a_map = _propagate_residues(len(xs), candidates, q_star, a_root)
        a_map = {i: v for i, v in a_map.items() if v}
    else:
        a_map = {}
    truth = GroundTruth(
        mode=mode,
        t_star=as_fraction(t_star),
        q_star=q_star,
        carrier=params.witness_carrier(),
        a_map=a_map,
    )
    noise_unit = params.noise_level * params.eps_edge
    alphas = []
    for i, x in enumerate(xs):
        alpha = truth.planted_alpha(i, x)
        if noise_unit:
            alpha += Fraction(rng.randint(-(10**6), 10**6), 10**6) * noise_unit
        alphas.append(alpha)
    p1, p2 = params.split_partition()
    cfg = Configuration(
        sites=tuple(Site(x, a) for x, a in zip(xs, alphas)),
        separation=params.separation,
        split_p1=p1,
        split_p2=p2,
        params=params,
    )
    order = list(range(len(candidates)))
    if params.edge_count is not None:
        rng.shuffle(order)
    min_w = params.min_witness()
    edges: list[Edge] = []
    for idx in order:
        if params.edge_count is not None and len(edges) >= params.edge_count:
            break
        i, j, p, q, slack = candidates[idx]
        rel = p * alphas[i] - q * alphas[j]
        witness = frozenset(
            w for w in pool_w if norm_mod(rel, w) <= params.eps_edge
        )
        if len(witness) < min_w:
            continue
        edges.append(Edge(i, j, p, q, witness, slack))
    if params.edge_count is not None and len(edges) < params.edge_count:
        raise InfeasibleParamsError(
            f"only {len(edges)} edges verify; {params.edge_count} requested"
        )
    if params.edge_count is None:
        edges.sort(key=lambda e: (e.i, e.j, e.p, e.q))
    return Instance(cfg=cfg, edges=tuple(edges), truth=truth, params=params)


@dataclass(frozen=True)
class AuditCheck:
    name: str
    passed: bool
    detail: str = ""


@dataclass(frozen=True)
class AuditReport:
    checks: tuple[AuditCheck, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_json(self) -> dict:
        return {
            "checks": [
                {"name": c.name, "pass": c.passed, "detail": c.detail}
                for c in self.checks
            ],
            "pass": self.passed,
        }


def audit_instance(inst: Instance) -> AuditReport:
    """Re-verify every instance invariant with exact arithmetic."""
    params = inst.params
    cfg = inst.cfg
    checks: list[AuditCheck] = []

    def check(name: str, ok: bool, detail: str = "") -> None:
        checks.append(AuditCheck(name, ok, detail))

    xs = sorted(s.x for s in cfg.sites)
    sep_ok = all(b - a >= params.separation for a, b in zip(xs, xs[1:]))
    check("separation", sep_ok)
    check(
        "sites_in_interval",
        all(params.site_lo <= x <= params.site_hi for x in xs),
    )
    pool_pq = set(params.edge_primes())
    check(
        "partition",
        cfg.split_p1.isdisjoint(cfg.split_p2)
        and cfg.split_p1 | cfg.split_p2 <= pool_pq,
    )
    pool_w = params.witness_primes()
    min_w = params.min_witness()
    bad_edge = ""
    for e in inst.edges:
        if not (0 <= e.i < len(cfg.sites) and 0 <= e.j < len(cfg.sites)):
            bad_edge = f"edge ({e.i},{e.j}) site index out of range"
            break
        if e.p not in cfg.split_p1 or e.q not in cfg.split_p2:
            bad_edge = f"edge ({e.i},{e.j},{e.p},{e.q}) not split-oriented"
            break
        slack = abs(cfg.sites[e.i].x / e.p - cfg.sites[e.j].x / e.q)
        if slack != e.slack or slack > params.s_edge:
            bad_edge = f"edge ({e.i},{e.j},{e.p},{e.q}) physical slack {slack}"
            break
        rel = e.p * cfg.sites[e.i].alpha - e.q * cfg.sites[e.j].alpha
        witness = frozenset(
            w for w in pool_w if norm_mod(rel, w) <= params.eps_edge
        )
        if witness != e.witness:
            bad_edge = f"edge ({e.i},{e.j},{e.p},{e.q}) witness mismatch"
            break
        if len(witness) < min_w:
            bad_edge = f"edge ({e.i},{e.j},{e.p},{e.q}) witness below density"
            break
    check("edges", not bad_edge, bad_edge)
    if inst.truth is not None:
        truth = inst.truth
        check(
            "coprimality",
            all(gcd(p, truth.q_star) == 1 for p in list(pool_pq) + list(pool_w)),
        )
        check(
            "residue_range",
            all(0 <= a < truth.q_star for a in truth.a_map.values()),
        )
        bound = params.noise_level * params.eps_edge
        planted_ok = True
        for i, site in enumerate(cfg.sites):
            ideal = truth.planted_alpha(i, site.x)
            if abs(site.alpha - ideal) > bound:
                planted_ok = False
                break
        check("planted_consistency", planted_ok)
    return AuditReport(tuple(checks))


def instance_to_json(inst: Instance) -> str:
    doc = {
        "schema": SCHEMA_VERSION,
        "params": inst.params.to_json(),
        "truth": inst.truth.to_json() if inst.truth else None,
        "sites": [
            {"x": frac_to_str(s.x), "alpha": frac_to_str(s.alpha)}
            for s in inst.cfg.sites
        ],
        "edges": [
            {
                "i": e.i,
                "j": e.j,
                "p": e.p,
                "q": e.q,
                "witness": sorted(e.witness),
                "slack": frac_to_str(e.slack),
            }
            for e in inst.edges
        ],
        "partition": [sorted(inst.cfg.split_p1), sorted(inst.cfg.split_p2)],
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"


def instance_from_json(text: str) -> Instance:
    doc = json.loads(text)
    if doc.get("schema") != SCHEMA_VERSION:
        raise ParamsError(f"unsupported schema {doc.get('schema')!r}")
    params = Params.from_json(doc["params"])
    truth = GroundTruth.from_json(doc["truth"]) if doc["truth"] else None
    cfg = Configuration(
        sites=tuple(
            Site(str_to_frac(s["x"]), str_to_frac(s["alpha"])) for s in doc["sites"]
        ),
        separation=params.separation,
        split_p1=frozenset(doc["partition"][0]),
        split_p2=frozenset(doc["partition"][1]),
        params=params,
    )
    edges = tuple(
        Edge(
            e["i"],
            e["j"],
            e["p"],
            e["q"],
            frozenset(e["witness"]),
            str_to_frac(e["slack"]),
        )
        for e in doc["edges"]
    )
    return Instance(cfg=cfg, edges=edges, truth=truth, params=params)
