"""
Command-line entry point: simulate, learn, influence, ingest, experiment, serve
"""
import argparse
import json
import logging
import os
import sys

import numpy as np
import pandas as pd
from pydantic import ValidationError

from config import DEFAULT_SEED_COUNT, LOG_FORMAT, LOG_LEVEL, MAX_WORKERS, OUTPUT_DIR, PERRON_MAX_ITER, PERRON_TOL
from social_learning.asl_simulator import beliefs_from_log_ratios
from social_learning.errors import SocialLearningError
from social_learning.experiment_harness import run_scenario, simulate_arm, write_outputs
from social_learning.graph_core import matrix_from_json, matrix_to_json
from social_learning.gsl_learner import GroundTruth, GslConfig, run_learner
from social_learning.influence_analyzer import build_influence_report, ground_truth_report, top_k_overlap
from social_learning.ingestion import build_belief_series, export_trace, load_sentiment_csv
from social_learning.scenarios import CHECKS, list_scenarios, load_scenario
from social_learning.trace_io import read_trace, read_truth, truth_path_for, write_trace, write_truth

logging.basicConfig(level=LOG_LEVEL, format=LOG_FORMAT)
logger = logging.getLogger("cli")


def cmd_simulate(args) -> int:
    config = load_scenario(args.config)
    if args.n_iterations is not None:
        config = config.model_copy(update={"n_iterations": args.n_iterations})
    seed = args.seed if args.seed is not None else config.seeds[0]
    simulated = simulate_arm(config, seed, config.model_arms[0])
    trace = simulated.trace
    write_trace(args.out, trace.lambdas, trace.map_estimates, trace.theta_star)
    write_truth(truth_path_for(args.out), trace.combination_changes, simulated.models)
    logger.info(f"Simulated {len(trace)} iterations of {config.name} (seed {seed}); burn-in {trace.burn_in}")
    return 0


def _load_gsl_config(path: str) -> GslConfig:
    with open(path, "r", encoding="utf-8") as handle:
        return GslConfig.model_validate_json(handle.read())


def cmd_learn(args) -> int:
    loaded = read_trace(args.trace)
    config = _load_gsl_config(args.config)
    truth = None
    truth_file = args.truth or truth_path_for(args.trace)
    if os.path.exists(truth_file):
        stored = read_truth(truth_file)
        theta_star = loaded.theta_star
        if theta_star is None:
            theta_star = np.full(len(loaded), stored.models.hypotheses.true_index)
        truth = GroundTruth.from_parts(stored.combination_changes, theta_star, stored.models)
    elif args.truth:
        raise FileNotFoundError(args.truth)

    run = run_learner(loaded.lambdas, config, truth)
    os.makedirs(args.out, exist_ok=True)
    errors = pd.DataFrame({
        "i": np.arange(config.burn_in, config.burn_in + run.a_error.size),
        "a_error": run.a_error,
        "llr_error": run.llr_error,
    })
    errors.to_csv(os.path.join(args.out, "errors.csv"), index=False)
    learned = {"A": matrix_to_json(run.a_estimate), "L_hat": run.llr_estimate.tolist()}
    if run.a_average is not None:
        learned["A_average"] = matrix_to_json(run.a_average)
        learned["L_hat_average"] = run.llr_average.tolist()
    with open(os.path.join(args.out, "learned.json"), "w") as handle:
        json.dump(learned, handle)
    logger.info(f"Learned from {len(loaded)} matrices; results in {args.out}")
    return 0


def cmd_influence(args) -> int:
    with open(args.learned, "r", encoding="utf-8") as handle:
        learned = json.load(handle)
    loaded = read_trace(args.trace)
    final_beliefs = beliefs_from_log_ratios(loaded.lambdas[-1])
    a_key, llr_key = ("A_average", "L_hat_average") if "A_average" in learned else ("A", "L_hat")
    report = build_influence_report(matrix_from_json(learned[a_key]), np.asarray(learned[llr_key], dtype=float),
                                    final_beliefs, tol=PERRON_TOL, max_iter=PERRON_MAX_ITER)
    payload = {"learned": report.to_dict()}
    if args.truth:
        stored = read_truth(args.truth)
        theta_star = int(loaded.theta_star[-1]) if loaded.theta_star is not None else None
        truth = ground_truth_report(stored.combination_changes[-1][1], stored.models, theta_star,
                                    tol=PERRON_TOL, max_iter=PERRON_MAX_ITER)
        k = args.top_k
        payload["ground_truth"] = truth.to_dict()
        payload["top_k"] = k
        payload["top_k_overlap"] = top_k_overlap(report.ranking, truth.ranking, k)

    out_dir = os.path.dirname(os.path.abspath(args.out))
    os.makedirs(out_dir, exist_ok=True)
    with open(args.out, "w") as handle:
        json.dump(payload, handle, indent=2)
    csv_path = os.path.splitext(args.out)[0] + ".csv"
    report.to_frame().to_csv(csv_path, index=False)
    logger.info(f"Influence report written to {args.out} and {csv_path}")
    return 0


def cmd_ingest(args) -> int:
    records = load_sentiment_csv(args.posts)
    agents = args.agents.split(",") if args.agents else None
    series = build_belief_series(records, tz_offset_hours=args.tz_offset, agents=agents)
    export_trace(series, args.out)
    logger.info(f"Agent order: {series.agents}")
    return 0


def cmd_experiment(args) -> int:
    config = load_scenario(args.scenario)
    if args.seed_count is not None:
        config = config.model_copy(update={"seeds": list(range(args.seed_count))})
    elif "seeds" not in config.model_fields_set and args.scenario not in list_scenarios():
        config = config.model_copy(update={"seeds": list(range(DEFAULT_SEED_COUNT))})
    result = run_scenario(config, workers=args.workers, checks=CHECKS)
    write_outputs(result, args.out)
    for check in result.checks:
        print(f"{'PASS' if check.passed else 'FAIL'} {check.name}: {check.detail}")
    return 0 if result.passed else 1


def cmd_serve(args) -> int:
    from server.main import mcp
    mcp.run()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Adaptive social learning simulator and graph learner")
    sub = parser.add_subparsers(dest="command", required=True)

    simulate = sub.add_parser("simulate", help="Simulate a scenario's first model arm and write a trace")
    simulate.add_argument("--config", required=True, help="Scenario JSON file or built-in scenario name")
    simulate.add_argument("--out", required=True, help="Trace path (.jsonl or .jsonl.gz)")
    simulate.add_argument("--seed", type=int, default=None, help="Seed (default: the scenario's first seed)")
    simulate.add_argument("--n-iterations", type=int, default=None,
                          help="Iterations after burn-in (default: the scenario's)")
    simulate.set_defaults(handler=cmd_simulate)

    learn = sub.add_parser("learn", help="Run the graph learner over a trace")
    learn.add_argument("--trace", required=True, help="Trace path")
    learn.add_argument("--config", required=True, help="Learner JSON: mu, delta, M, W, l1_weight, burn_in, known_llr")
    learn.add_argument("--out", default=OUTPUT_DIR, help=f"Output directory (default: {OUTPUT_DIR})")
    learn.add_argument("--truth", default=None, help="Ground-truth JSON (default: sidecar of the trace if present)")
    learn.set_defaults(handler=cmd_learn)

    influence = sub.add_parser("influence", help="Influence report from learned quantities")
    influence.add_argument("--learned", required=True, help="learned.json from the learn command")
    influence.add_argument("--trace", required=True, help="Trace the quantities were learned from")
    influence.add_argument("--truth", default=None, help="Ground-truth JSON for comparison")
    influence.add_argument("--top-k", type=int, default=3, help="k of the top-k comparison (default: 3)")
    influence.add_argument("--out", required=True, help="Report JSON path; the CSV goes next to it")
    influence.set_defaults(handler=cmd_influence)

    ingest = sub.add_parser("ingest", help="Sentiment CSV to a binary-hypothesis trace")
    ingest.add_argument("--posts", required=True, help="CSV: agent_id,timestamp_iso8601,p_neg,p_neu,p_pos")
    ingest.add_argument("--out", required=True, help="Trace path")
    ingest.add_argument("--tz-offset", type=float, default=0.0, help="Day boundary offset from UTC in hours")
    ingest.add_argument("--agents", default=None, help="Comma-separated agent order")
    ingest.set_defaults(handler=cmd_ingest)

    experiment = sub.add_parser("experiment", help="Run a scenario and its embedded checks")
    experiment.add_argument("--scenario", required=True,
                            help=f"Scenario JSON file or one of: {', '.join(list_scenarios())}")
    experiment.add_argument("--out", default=OUTPUT_DIR, help=f"Output directory (default: {OUTPUT_DIR})")
    experiment.add_argument("--workers", type=int, default=MAX_WORKERS, help="Processes for the seeds")
    experiment.add_argument("--seed-count", type=int, default=None, help="Replace the seeds with 0..count-1")
    experiment.set_defaults(handler=cmd_experiment)

    serve = sub.add_parser("serve", help="Start the tool server")
    serve.set_defaults(handler=cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except (SocialLearningError, ValidationError, ValueError, OSError) as e:
        logger.error(f"{args.command} failed: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
