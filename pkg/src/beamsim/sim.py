"""Monte-Carlo experiment engine: SER sweeps, analytic overlays, rates, CSI error."""

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import analysis, beamformers, channel, convex, modem

ZF = "ZF"
MMSE = "MMSE"
MPE_FULL = "MPE_FULL"
MPE_REDUCED = "MPE_REDUCED"
SMINR_AMP = "SMINR_AMP"
SMINR = "SMINR"

ALL_METHODS = (ZF, MMSE, MPE_FULL, MPE_REDUCED, SMINR_AMP, SMINR)
SOLVER_KINDS = {MPE_FULL: convex.MPE_FULL, MPE_REDUCED: convex.MPE_REDUCED,
                SMINR_AMP: convex.SMINR_AMP}

CSV_COLUMNS = ("method", "snr_db", "ser", "ser_ci", "pe_analytic", "pe_bound",
               "sum_rate", "infeasible_frac")


@dataclass
class Scenario:
    """Full experiment description for one sweep.

    Defaults reproduce the four-user 8-PAM, four-antenna setup at desk scale
    (500 realizations x 2000 symbols); ``paper_scale()`` restores the
    original 10^4 x 10^3.
    """

    n_antennas: int = 4
    users: tuple = field(default_factory=lambda: tuple(modem.unit_energy_pam(8) for _ in range(4)))
    snr_grid_db: tuple = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0)
    n_realizations: int = 500
    n_symbols: int = 2000
    csi_error_var: float = 0.0
    methods: tuple = ALL_METHODS
    seed: int = 0

    def __post_init__(self):
        self.users = tuple(self.users)
        self.snr_grid_db = tuple(float(s) for s in self.snr_grid_db)
        self.methods = tuple(self.methods)
        unknown = set(self.methods) - set(ALL_METHODS)
        if unknown:
            raise ValueError(f"unknown methods: {sorted(unknown)}")
        if self.csi_error_var < 0:
            raise ValueError("csi_error_var must be nonnegative")

    def paper_scale(self) -> "Scenario":
        return Scenario(
            n_antennas=self.n_antennas, users=self.users,
            snr_grid_db=self.snr_grid_db, n_realizations=10_000,
            n_symbols=1_000, csi_error_var=self.csi_error_var,
            methods=self.methods, seed=self.seed,
        )

    def to_dict(self) -> dict:
        return {
            "n_antennas": self.n_antennas,
            "users": [
                {"order": c.order, "half_spacing": c.half_spacing,
                 "pulse_energy": c.pulse_energy}
                for c in self.users
            ],
            "snr_grid_db": list(self.snr_grid_db),
            "n_realizations": self.n_realizations,
            "n_symbols": self.n_symbols,
            "csi_error_var": self.csi_error_var,
            "methods": list(self.methods),
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        users = tuple(
            modem.Constellation(u["order"], u["half_spacing"], u["pulse_energy"])
            for u in d["users"]
        )
        return cls(
            n_antennas=d["n_antennas"], users=users,
            snr_grid_db=tuple(d["snr_grid_db"]),
            n_realizations=d["n_realizations"], n_symbols=d["n_symbols"],
            csi_error_var=d["csi_error_var"], methods=tuple(d["methods"]),
            seed=d["seed"],
        )


@dataclass
class SweepRow:
    method: str
    snr_db: float
    ser: float
    ser_ci: float  # one binomial standard error of ser
    pe_analytic: float
    pe_bound: float
    sum_rate: float
    infeasible_frac: float


@dataclass
class SweepResult:
    scenario: Scenario
    rows: list

    def row(self, method: str, snr_db: float) -> SweepRow:
        for r in self.rows:
            if r.method == method and r.snr_db == snr_db:
                return r
        raise KeyError((method, snr_db))

    def series(self, method: str):
        return [r for r in self.rows if r.method == method]

    def to_csv(self) -> str:
        lines = [",".join(CSV_COLUMNS)]
        for r in self.rows:
            lines.append(
                f"{r.method},{r.snr_db:.17g},{r.ser:.17g},{r.ser_ci:.17g},"
                f"{r.pe_analytic:.17g},{r.pe_bound:.17g},{r.sum_rate:.17g},"
                f"{r.infeasible_frac:.17g}"
            )
        return "\n".join(lines) + "\n"

    def rows_as_dicts(self) -> list:
        """Row dicts with NaN mapped to None, suitable for strict JSON."""
        out = []
        for r in self.rows:
            d = vars(r).copy()
            for key, val in d.items():
                if isinstance(val, float) and math.isnan(val):
                    d[key] = None
            out.append(d)
        return out

    def to_json(self) -> str:
        return json.dumps(
            {"scenario": self.scenario.to_dict(), "rows": self.rows_as_dicts()},
            indent=2,
        )


def snr_db_to_sigma(snr_db: float) -> float:
    """Noise std for unit-energy symbols: SNR(dB) = 10 log10(1 / sigma_z^2)."""
    return 10.0 ** (-snr_db / 20.0)


def sum_rate(ser_per_user, constellations) -> float:
    """Goodput proxy sum_k log2(L_k) (1 - SER_k) in bits per channel use."""
    ser = np.asarray(ser_per_user, dtype=float)
    if np.any((ser < 0) | (ser > 1)):
        raise ValueError("SER values must lie in [0, 1]")
    return float(sum(c.bits_per_symbol * (1.0 - s) for c, s in zip(constellations, ser)))


def _method_weights(method, H_csi, constellations, sigma_z):
    """Per-user weights of one method from the available CSI.

    Returns (weights list, infeasible flags); infeasible solver instances
    fall back to MMSE weights.
    """
    K = H_csi.shape[1]
    energies = [c.average_energy for c in constellations]
    weights, infeasible = [], []
    for k in range(K):
        flag = False
        if method == ZF:
            w = beamformers.zf(H_csi, k)
        elif method == MMSE:
            w = beamformers.mmse(H_csi, k, sigma_z, energies)
        elif method == SMINR:
            w = beamformers.sminr_closed_form(H_csi, k, constellations)
        else:
            program = convex.ConvexProgram(
                SOLVER_KINDS[method], H_csi, k, tuple(constellations), sigma_z
            )
            report = convex.solve(program)
            if report.status == convex.INFEASIBLE:
                w = beamformers.mmse(H_csi, k, sigma_z, energies)
                flag = True
            else:
                w = report.weights
        weights.append(w)
        infeasible.append(flag)
    return weights, infeasible


def _run_realization(scenario: Scenario, r_index: int, tuple_sets):
    """All per-realization statistics, deterministic in (seed, r_index)."""
    K = len(scenario.users)
    n_methods = len(scenario.methods)
    n_snr = len(scenario.snr_grid_db)
    ss = np.random.SeedSequence(entropy=scenario.seed, spawn_key=(r_index,))
    rng_channel, rng_csi, rng_sym, rng_noise = [
        np.random.default_rng(s) for s in ss.spawn(4)
    ]

    H = channel.sample_channel(scenario.n_antennas, K, rng_channel)
    H_csi = channel.perturb_csi(H, scenario.csi_error_var, rng_csi)

    errors = np.zeros((n_methods, n_snr, K), dtype=np.int64)
    pe = np.zeros((n_methods, n_snr, K))
    bound = np.zeros((n_methods, n_snr, K))
    infeas = np.zeros((n_methods, n_snr, K), dtype=np.int64)

    n_sym = scenario.n_symbols
    if n_sym > 0:
        indices, values = modem.draw_symbols(scenario.users, rng_sym, size=n_sym)
        clean = H @ values
        noise_re = rng_noise.standard_normal(clean.shape)
        noise_im = rng_noise.standard_normal(clean.shape)

    for si, snr_db in enumerate(scenario.snr_grid_db):
        sigma_z = snr_db_to_sigma(snr_db)
        if n_sym > 0:
            r_block = clean + sigma_z / np.sqrt(2.0) * (noise_re + 1j * noise_im)
        for mi, method in enumerate(scenario.methods):
            weights, flags = _method_weights(method, H_csi, scenario.users, sigma_z)
            for k, w in enumerate(weights):
                infeas[mi, si, k] = int(flags[k])
                pe[mi, si, k] = analysis.exact_pe(
                    w, H, k, scenario.users, sigma_z, tuple_sets[k]
                )
                bound[mi, si, k] = analysis.pe_upper_bound(
                    w, H, k, scenario.users, sigma_z
                )
                if n_sym > 0:
                    gain = (w @ H_csi[:, k]).real * math.sqrt(
                        scenario.users[k].pulse_energy
                    )
                    decisions = modem.decide_block(
                        (w @ r_block).real, gain, scenario.users[k]
                    )
                    errors[mi, si, k] = int(np.count_nonzero(decisions != indices[k]))
    return r_index, errors, pe, bound, infeas


def run_sweep(scenario: Scenario, n_workers: int = 1) -> SweepResult:
    """Run the full Monte-Carlo sweep of a scenario.

    Realizations are independent work units; results are reduced in fixed
    realization order so the output is bit-identical for any worker count.
    """
    K = len(scenario.users)
    n_methods = len(scenario.methods)
    n_snr = len(scenario.snr_grid_db)
    n_real = scenario.n_realizations
    tuple_sets = [modem.enumerate_interferers(scenario.users, k) for k in range(K)]

    errors = np.zeros((n_real, n_methods, n_snr, K), dtype=np.int64)
    pe = np.zeros((n_real, n_methods, n_snr, K))
    bound = np.zeros((n_real, n_methods, n_snr, K))
    infeas = np.zeros((n_real, n_methods, n_snr, K), dtype=np.int64)

    if n_workers and n_workers > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            results = pool.map(
                _run_realization,
                [scenario] * n_real,
                range(n_real),
                [tuple_sets] * n_real,
                chunksize=max(1, n_real // (8 * n_workers)),
            )
            for r, e, p, b, i in results:
                errors[r], pe[r], bound[r], infeas[r] = e, p, b, i
    else:
        for r in range(n_real):
            _, errors[r], pe[r], bound[r], infeas[r] = _run_realization(
                scenario, r, tuple_sets
            )

    rows = []
    n_total = n_real * scenario.n_symbols * K
    for mi, method in enumerate(scenario.methods):
        for si, snr_db in enumerate(scenario.snr_grid_db):
            if scenario.n_symbols > 0:
                err_user = errors[:, mi, si, :].sum(axis=0)
                ser = float(err_user.sum()) / n_total
                stderr = math.sqrt(max(ser * (1 - ser), 1.0 / n_total) / n_total)
                ser_user = err_user / (n_real * scenario.n_symbols)
                rate = sum_rate(ser_user, scenario.users)
            else:
                ser, stderr = float("nan"), float("nan")
                pe_user = pe[:, mi, si, :].mean(axis=0)
                rate = sum_rate(np.clip(pe_user, 0.0, 1.0), scenario.users)
            rows.append(
                SweepRow(
                    method=method,
                    snr_db=snr_db,
                    ser=ser,
                    ser_ci=stderr,
                    pe_analytic=float(pe[:, mi, si, :].mean()),
                    pe_bound=float(bound[:, mi, si, :].mean()),
                    sum_rate=rate,
                    infeasible_frac=float(infeas[:, mi, si, :].mean()),
                )
            )
    return SweepResult(scenario=scenario, rows=rows)


def imperfect_csi_sweep(scenario: Scenario, n_workers: int = 1) -> SweepResult:
    """Sweep with beamformers computed from perturbed CSI.

    Restricted to the closed-form methods compared in the imperfect-CSI
    experiment; csi_error_var = 0 reduces exactly to ``run_sweep``.
    """
    allowed = {ZF, MMSE, SMINR}
    if not set(scenario.methods) <= allowed:
        raise ValueError(f"imperfect-CSI sweep supports methods {sorted(allowed)}")
    return run_sweep(scenario, n_workers=n_workers)


def qam_reference_sweep(scenario: Scenario, qam_order: int = 64,
                        n_workers: int = 1) -> SweepResult:
    """ZF/MMSE reference curves for two users with square-QAM modulation.

    Each QAM symbol is two independent PAM coordinates; detection divides
    the array output by the effective complex gain and quantizes each axis.
    SER is counted at the QAM-symbol level; analytic 1D error probabilities
    do not apply and are reported as NaN.
    """
    side = math.isqrt(qam_order)
    if side * side != qam_order:
        raise ValueError(f"QAM order {qam_order} is not a perfect square")
    K = len(scenario.users)
    if K != 2:
        raise ValueError("the QAM reference is defined for K = 2 users")
    # per-axis PAM scaled for unit average QAM symbol energy
    axis = modem.Constellation(
        order=side, half_spacing=math.sqrt(3.0 / (2.0 * (side**2 - 1))),
        pulse_energy=1.0,
    )
    methods = [m for m in scenario.methods if m in (ZF, MMSE)]
    bits = math.log2(qam_order)

    n_real, n_sym = scenario.n_realizations, scenario.n_symbols
    n_snr = len(scenario.snr_grid_db)
    errors = np.zeros((n_real, len(methods), n_snr, K), dtype=np.int64)
    for r in range(n_real):
        ss = np.random.SeedSequence(entropy=scenario.seed, spawn_key=(r,))
        rng_channel, rng_csi, rng_sym, rng_noise = [
            np.random.default_rng(s) for s in ss.spawn(4)
        ]
        H = channel.sample_channel(scenario.n_antennas, K, rng_channel)
        H_csi = channel.perturb_csi(H, scenario.csi_error_var, rng_csi)
        idx_re, val_re = modem.draw_symbols([axis] * K, rng_sym, size=n_sym)
        idx_im, val_im = modem.draw_symbols([axis] * K, rng_sym, size=n_sym)
        symbols = val_re + 1j * val_im
        clean = H @ symbols
        noise = rng_noise.standard_normal(clean.shape) + 1j * rng_noise.standard_normal(clean.shape)
        for si, snr_db in enumerate(scenario.snr_grid_db):
            sigma_z = snr_db_to_sigma(snr_db)
            r_block = clean + sigma_z / np.sqrt(2.0) * noise
            for mi, method in enumerate(methods):
                for k in range(K):
                    if method == ZF:
                        w = beamformers.zf(H_csi, k)
                    else:
                        w = beamformers.mmse(H_csi, k, sigma_z, [1.0] * K)
                    y = (w @ r_block) / (w @ H_csi[:, k])
                    dec_re = modem.decide_block(y.real, math.sqrt(axis.pulse_energy), axis)
                    dec_im = modem.decide_block(y.imag, math.sqrt(axis.pulse_energy), axis)
                    wrong = (dec_re != idx_re[k]) | (dec_im != idx_im[k])
                    errors[r, mi, si, k] = int(np.count_nonzero(wrong))

    rows = []
    n_total = n_real * n_sym * K
    for mi, method in enumerate(methods):
        for si, snr_db in enumerate(scenario.snr_grid_db):
            err_user = errors[:, mi, si, :].sum(axis=0)
            ser = float(err_user.sum()) / n_total
            stderr = math.sqrt(max(ser * (1 - ser), 1.0 / n_total) / n_total)
            ser_user = err_user / (n_real * n_sym)
            rate = float(sum(bits * (1.0 - s) for s in ser_user))
            rows.append(
                SweepRow(
                    method=f"{method}-QAM", snr_db=snr_db, ser=ser, ser_ci=stderr,
                    pe_analytic=float("nan"), pe_bound=float("nan"),
                    sum_rate=rate, infeasible_frac=0.0,
                )
            )
    return SweepResult(scenario=scenario, rows=rows)
