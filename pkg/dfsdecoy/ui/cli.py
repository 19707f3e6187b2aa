#!/usr/bin/env python3
import argparse
import csv
import io
import itertools
import logging
import sys
from typing import Sequence

import dfsdecoy.bounds as bounds
import dfsdecoy.channel as channel
import dfsdecoy.config as config
import dfsdecoy.keyrate as keyrate
import dfsdecoy.ledger as ledger
import dfsdecoy.optics as optics
import dfsdecoy.solver as solver

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_VERIFICATION = 2

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")

SWEEP_HEADER = ["L_km", "Q_signal", "E_signal", "S1_lower_nodecoy", "e1_upper_nodecoy", "R_nodecoy",
               "S1_lower_3int", "e1_upper_3int", "R_3int"]
DIAGNOSTICS_HEADER = ["R_nodecoy.diag", "S1_lower_nodecoy.diag", "e1_upper_nodecoy.diag",
                      "R_3int.diag", "S1_lower_3int.diag", "e1_upper_3int.diag"]
BOUNDS_HEADER = ["L_km", "S1_true", "e1_true", "S1_lower_3int", "e1_upper_3int", "S1_lower_2int", "e1_upper_2int",
                 "S1_lower_nodecoy", "e1_upper_nodecoy"]

# Command-line flag -> configuration key
FLAGS: dict[str, str] = {
    "--mode": "mode",
    "--out": "out",
    "--lambda": "lambda",
    "--lambda-prime": "lambda_prime",
    "--k-db-per-km": "k_db_per_km",
    "--dark-count": "dark_count",
    "--f-ec": "f_ec",
    "--l-start": "l_start",
    "--l-end": "l_end",
    "--l-step": "l_step",
    "--length-km": "length_km",
    "--eq20-variant": "eq20_variant",
    "--workers": "workers",
}


def fmt(value: float) -> str:
    """
    Fixed 12-significant-digit scientific notation.
    """
    return f"{value:.11e}"


class ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        raise config.ConfigError(message)


def build_arg_parser() -> ArgumentParser:
    arg_parser = ArgumentParser(prog="dfsdecoy",
                                description="Decoy-state key rates and splitting-attack checks for DFS-encoded QKD.")
    for flag, key in FLAGS.items():
        arg_parser.add_argument(flag, dest=key, default=None)
    arg_parser.add_argument("--config", default=None, help="flat key=value configuration file")
    arg_parser.add_argument("--diagnostics", action="store_true", default=None)
    arg_parser.add_argument("--log-level", default="WARNING", type=str.upper, choices=LOG_LEVELS)
    return arg_parser


def load_config(argv: Sequence[str]) -> tuple[config.RunConfig, str]:
    """
    Parse command-line arguments and the optional configuration file.
    :return: the run configuration and the requested log level
    """
    args = build_arg_parser().parse_args(argv)
    text = ""
    if args.config:
        with open(args.config, encoding="utf-8") as f:
            text = f.read()
    overrides = {key: getattr(args, key) for key in FLAGS.values() if getattr(args, key) is not None}
    if args.diagnostics:
        overrides["diagnostics"] = "true"
    return config.parse_config(text, overrides), args.log_level


def emit(out: str, text: str):
    if out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as f:
            f.write(text)


def _constants(cfg: config.RunConfig) -> keyrate.ProtocolConstants:
    return keyrate.ProtocolConstants(sifting=cfg.sifting, ec_inefficiency=cfg.f_ec)


def _error_rate(b: bounds.DecoyBounds) -> float:
    # Without a single-pair bound the worst case error rate is reported
    return b.e1_upper if b.available else bounds.MAX_ERROR_RATE


def _raw(value: float | None) -> float:
    return float("nan") if value is None else value


def sweep_rows(cfg: config.RunConfig) -> list[list[str]]:
    params = cfg.channel_params()
    consts = _constants(cfg)
    lengths = cfg.lengths
    no_decoy = keyrate.sweep(bounds.DecoyProtocol.no_decoy(cfg.lambda_), params, consts, lengths,
                             variant=cfg.eq20_variant, workers=cfg.workers)
    three = keyrate.sweep(bounds.DecoyProtocol.three_intensity(cfg.lambda_, cfg.lambda_prime), params, consts,
                          lengths, variant=cfg.eq20_variant, workers=cfg.workers)
    rows = []
    for length, nd, ti in zip(lengths, no_decoy, three):
        row = [length, ti.observed.Q, ti.observed.E,
               nd.bounds.S1_lower, _error_rate(nd.bounds), nd.R_lower,
               ti.bounds.S1_lower, _error_rate(ti.bounds), ti.R_lower]
        if cfg.diagnostics:
            row += [nd.R_raw, nd.bounds.S1_lower_raw, _raw(nd.bounds.e1_upper_raw),
                    ti.R_raw, ti.bounds.S1_lower_raw, _raw(ti.bounds.e1_upper_raw)]
        rows.append([fmt(v) for v in row])
    for name, points in (("no-decoy", no_decoy), ("3-intensity", three)):
        secure = [p.length_km for p in points if p.R_lower > 0]
        logger.info("%s: last sweep length with a positive rate: %s km", name, secure[-1] if secure else "none")
    return rows


def to_csv(header: list[str], rows: list[list[str]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def run_fig1_sweep(cfg: config.RunConfig) -> str:
    """
    Key-rate curves without decoys and with three intensities over the configured lengths, as CSV.
    """
    header = SWEEP_HEADER + (DIAGNOSTICS_HEADER if cfg.diagnostics else [])
    text = to_csv(header, sweep_rows(cfg))
    emit(cfg.out, text)
    return text


def run_bounds_table(cfg: config.RunConfig) -> str:
    """
    True single-pair yield and error rate next to every protocol's bounds, as CSV.
    """
    params = cfg.channel_params()
    consts = _constants(cfg)
    protocols = [bounds.DecoyProtocol.three_intensity(cfg.lambda_, cfg.lambda_prime),
                 bounds.DecoyProtocol.two_intensity(cfg.lambda_, cfg.lambda_prime),
                 bounds.DecoyProtocol.no_decoy(cfg.lambda_)]
    curves = [keyrate.sweep(p, params, consts, cfg.lengths, variant=cfg.eq20_variant, workers=cfg.workers)
              for p in protocols]
    rows = []
    for i, length in enumerate(cfg.lengths):
        at_length = params.at_length(length)
        s1 = channel.yield_n(at_length, 1)
        e1 = channel.error_yield_n(at_length, 1, cfg.eq20_variant) / s1 if s1 else 0.0
        row = [length, s1, e1]
        for curve in curves:
            row += [curve[i].bounds.S1_lower, _error_rate(curve[i].bounds)]
        rows.append([fmt(v) for v in row])
    text = to_csv(BOUNDS_HEADER, rows)
    emit(cfg.out, text)
    return text


def run_pns_limit(cfg: config.RunConfig) -> tuple[str, bool]:
    closed = keyrate.pns_limit_distance(cfg.lambda_, cfg.k_db_per_km)
    bisected = keyrate.pns_limit_distance_bisect(cfg.lambda_, cfg.k_db_per_km)
    exact = keyrate.pns_limit_distance(cfg.lambda_, cfg.k_db_per_km, optics.EXACT_SUCCESS)
    agree = abs(closed - bisected) <= 1e-6
    lines = [
        f"lambda={cfg.lambda_:g} k={cfg.k_db_per_km:g} dB/km attack success {keyrate.PNS_ATTACK_SUCCESS:g}",
        f"closed form: {closed:.6f} km",
        f"bisection:   {bisected:.6f} km",
        f"printed:     {ledger.PRINTED_PNS_LIMIT_KM:g} km (deviation {closed - ledger.PRINTED_PNS_LIMIT_KM:+.4f} km)",
        f"with the simulated success {optics.EXACT_SUCCESS:.6f}: {exact:.6f} km",
        f"VERDICT: {'PASS' if agree else 'FAIL'}",
    ]
    report = "\n".join(lines) + "\n"
    emit(cfg.out, report)
    return report, agree


def _within(deviation: float, tolerance: float) -> bool:
    return deviation < tolerance


def run_attack_verify(cfg: config.RunConfig) -> tuple[str, bool]:
    """
    Replay the splitting attack on all four codes and check it against the expected probabilities and states.
    :return: the report and whether every check passed
    """
    tol = cfg.attack_tolerance
    lines = ["code\tpostselection\tU1/P1\tU2/P2\tsuccess\tfidelity\tsigma2\tkept\tsent\tintermediate"]
    passed = True
    reference = None
    for code in optics.Code:
        trace = optics.run_full_attack(code)
        fidelity = optics.product_fidelity(trace.final_state, code)
        sigma2 = float(optics.singular_values(trace.final_state)[1])
        kept, sent = optics.pair_factors(trace.final_state)
        expected = optics.single_pair_vector(code)
        kept_f = optics.vector_fidelity(expected, kept)
        sent_f = optics.vector_fidelity(expected, sent)
        p = trace.probabilities
        lines.append(f"{code}\t" + "\t".join(f"{v:.12f}" for v in (*p, trace.conditional_success)) +
                     f"\t{fidelity:.12f}\t{sigma2:.3e}\t{kept_f:.12f}\t{sent_f:.12f}\t"
                     f"{optics.intermediate_signature(trace.intermediate_state)}")
        checks = [_within(abs(a - b), tol) for a, b in zip(p, optics.EXACT_STAGE_PROBABILITIES)]
        checks += [_within(abs(trace.conditional_success - optics.EXACT_SUCCESS), tol),
                   _within(1 - fidelity, tol), _within(sigma2, tol),
                   _within(1 - kept_f, tol), _within(1 - sent_f, tol)]
        if reference is not None:
            checks.append(_within(max(abs(a - b) for a, b in zip(p, reference)), tol))
        reference = p
        passed &= all(checks)
    for iso in (optics.ISOMETRY_ONE, optics.ISOMETRY_TWO):
        deviation = optics.check_isometry(iso)
        lines.append(f"{iso.name} inner-product deviation: {deviation:.3e}")
        passed &= _within(deviation, tol)
    printed = optics.PRINTED_STAGE_PROBABILITIES
    lines.append("printed stage probabilities: " + " ".join(f"{v:g}" for v in printed) +
                 f" overall {optics.PRINTED_SUCCESS:g}")
    lines.append("simulated stage probabilities: " + " ".join(f"{v:.12g}" for v in reference) +
                 f" overall {reference[1] * reference[2]:.12g}")
    lines.append(f"VERDICT: {'PASS' if passed else 'FAIL'}")
    report = "\n".join(lines) + "\n"
    logger.info("Attack verification %s", "passed" if passed else "failed")
    emit(cfg.out, report)
    return report, passed


def run_optimize(cfg: config.RunConfig) -> str:
    grid = list(itertools.product(cfg.lambda_grid, cfg.lambda_prime_grid))
    choice = solver.optimize_intensities(cfg.channel_params(cfg.length_km), _constants(cfg),
                                         bounds.ProtocolKind.THREE_INTENSITY, grid, variant=cfg.eq20_variant)
    if choice is None:
        text = f"L_km={fmt(cfg.length_km)} no secure rate on the grid\n"
    else:
        text = (f"L_km={fmt(cfg.length_km)} lambda={fmt(choice.lambda_)} lambda_prime={fmt(choice.lambda_prime)} "
                f"R_lower={fmt(choice.point.R_lower)}\n")
    emit(cfg.out, text)
    return text


def run_ledger(cfg: config.RunConfig) -> str:
    text = ledger.format_ledger(ledger.collect_discrepancies(
        lambda_=cfg.lambda_, lambda_prime=cfg.lambda_prime, k_db_per_km=cfg.k_db_per_km,
        dark_count=cfg.dark_count, tolerance=cfg.agreement_tolerance, consts=_constants(cfg)))
    emit(cfg.out, text)
    return text


def run(cfg: config.RunConfig) -> int:
    match cfg.mode:
        case config.Mode.FIG1_SWEEP:
            run_fig1_sweep(cfg)
        case config.Mode.BOUNDS_TABLE:
            run_bounds_table(cfg)
        case config.Mode.OPTIMIZE:
            run_optimize(cfg)
        case config.Mode.LEDGER:
            run_ledger(cfg)
        case config.Mode.PNS_LIMIT:
            return EXIT_OK if run_pns_limit(cfg)[1] else EXIT_VERIFICATION
        case config.Mode.ATTACK_VERIFY:
            return EXIT_OK if run_attack_verify(cfg)[1] else EXIT_VERIFICATION
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    try:
        cfg, log_level = load_config(sys.argv[1:] if argv is None else argv)
        logging.basicConfig(level=log_level, stream=sys.stderr,
                            format="%(asctime)s %(name)s %(levelname)s %(message)s")
        return run(cfg)
    except (ValueError, OSError) as e:
        # ConfigError and the domain errors are ValueErrors
        print(f"dfsdecoy: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == '__main__':
    sys.exit(main())
