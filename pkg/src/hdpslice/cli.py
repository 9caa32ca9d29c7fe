"""Command-line surface: generate, fit, eval.

Exit codes: 0 success, 2 configuration error, 3 data-format error,
4 numerical or invariant failure.
"""

import argparse
import sys

import numpy as np

from . import io, streams
from .errors import ConfigError, DataFormatError, InvariantError, NumericalError
from .generator import generate_labels, generate_observations
from .metrics import aggregate_labels, majority_vote, nmi
from .sampler import run
from .state import load_checkpoint, save_checkpoint


def cmd_generate(cfg):
    """Draw a synthetic dataset plus its true labels and write both."""
    if cfg.seed is None:
        raise ConfigError("--seed is required for generate")
    if cfg.dataset is None or cfg.truth_labels is None:
        raise ConfigError("generate needs dataset and truth_labels output paths")
    kernel = cfg.make_kernel()
    truth = generate_labels(cfg.gamma0, cfg.alpha0,
                            [cfg.group_size] * cfg.groups,
                            streams.substream(cfg.seed, streams.GEN_LABELS))
    data = generate_observations(truth, kernel,
                                 streams.substream(cfg.seed, streams.GEN_OBS))
    io.write_dataset(data, cfg.dataset)
    io.write_labels(truth.labels, cfg.truth_labels)
    print(f"generated {data.num_groups} groups, "
          f"{int(data.sizes.sum())} observations, {truth.num_dishes} dishes")
    return 0


def cmd_fit(cfg):
    """Run the sampler on a dataset, writing the trace and final labels."""
    if cfg.dataset is None:
        raise ConfigError("fit needs a dataset path")
    if cfg.out_trace is None or cfg.out_labels is None:
        raise ConfigError("fit needs out_trace and out_labels paths")
    data = io.read_dataset(cfg.dataset)
    kernel = cfg.make_kernel()
    if kernel.observation_kind != data.kind:
        raise ConfigError(f"kernel {cfg.kernel!r} cannot model a {data.kind} dataset")
    if data.kind == "tokens" and kernel.vocab_size != data.vocab_size:
        raise ConfigError(f"kernel W={kernel.vocab_size} but dataset W={data.vocab_size}")
    if data.kind == "vectors" and kernel.dim != data.dim:
        raise ConfigError(f"kernel d={kernel.dim} but dataset d={data.dim}")

    truth = None
    if cfg.truth_labels is not None:
        truth_groups = io.read_labels(cfg.truth_labels)
        if [len(g) for g in truth_groups] != [len(g) for g in data.groups]:
            raise DataFormatError("truth labels do not align with the dataset")
        truth = aggregate_labels(truth_groups)

    hp = cfg.hyperparams()
    state, start = None, 1
    if cfg.resume is not None:
        state, ck_seed, start = load_checkpoint(cfg.resume)
        if ck_seed != hp.seed:
            raise ConfigError(f"checkpoint seed {ck_seed} != configured seed {hp.seed}")

    def dump_labels(iteration, z):
        io.write_labels(z, f"{cfg.out_labels}.iter{iteration:06d}")

    with io.TraceWriter(cfg.out_trace) as tw:
        records, final = run(data, kernel, hp, truth=truth, workers=cfg.workers,
                             state=state, start_iteration=start,
                             on_record=tw.write,
                             on_labels=dump_labels if cfg.labels_every else None,
                             labels_every=cfg.labels_every)
    from .state import derive_z
    io.write_labels(derive_z(final), cfg.out_labels)
    if cfg.out_checkpoint is not None:
        save_checkpoint(final, hp, hp.max_iterations + 1, cfg.out_checkpoint)
    if records:
        last = records[-1]
        print(f"fit: {len(records)} iterations, active dishes {last.active_dishes}, "
              f"log joint {last.log_joint:.6g}")
    else:
        print("fit: 0 iterations")
    return 0


def cmd_eval(labels_path, truth_path, vote):
    """Score estimated labels against truth; optionally per document."""
    est = io.read_labels(labels_path)
    ref = io.read_labels(truth_path)
    if [len(g) for g in est] != [len(g) for g in ref]:
        raise DataFormatError("label files do not align")
    token_nmi = nmi(aggregate_labels(est), aggregate_labels(ref))
    print(f"token NMI: {token_nmi:.6g}")
    if vote:
        doc_nmi = nmi(majority_vote(est), majority_vote(ref))
        print(f"document NMI (majority vote): {doc_nmi:.6g}")
    return 0


def _add_config_flags(p):
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--gamma0", type=float)
    p.add_argument("--alpha0", type=float)
    p.add_argument("--initial-t-cap", dest="initial_t_cap", type=int)
    p.add_argument("--initial-k-cap", dest="initial_k_cap", type=int)
    p.add_argument("--growth-factor", dest="growth_factor", type=float)
    p.add_argument("--max-iterations", dest="max_iterations", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--max-restarts", dest="max_restarts", type=int)
    p.add_argument("--kernel", choices=["multinomial", "gaussian"])
    p.add_argument("--d", type=int)
    p.add_argument("--tau-phi2", dest="tau_phi2", type=float)
    p.add_argument("--tau-y2", dest="tau_y2", type=float)
    p.add_argument("--W", type=int)
    p.add_argument("--alpha-w", dest="alpha_w", type=float)
    p.add_argument("--dataset")
    p.add_argument("--truth-labels", dest="truth_labels")
    p.add_argument("--out-trace", dest="out_trace")
    p.add_argument("--out-labels", dest="out_labels")
    p.add_argument("--out-checkpoint", dest="out_checkpoint")
    p.add_argument("--workers", type=int)
    p.add_argument("--labels-every", dest="labels_every", type=int)
    p.add_argument("--groups", type=int)
    p.add_argument("--group-size", dest="group_size", type=int)


def build_parser():
    parser = argparse.ArgumentParser(prog="hdpslice",
                                     description="Slice sampler for HDP mixtures")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="draw a synthetic dataset with truth labels")
    _add_config_flags(g)

    f = sub.add_parser("fit", help="run the sampler on a dataset")
    _add_config_flags(f)
    f.add_argument("--resume", help="checkpoint file to resume from")

    e = sub.add_parser("eval", help="score labels against truth labels")
    e.add_argument("labels")
    e.add_argument("truth")
    e.add_argument("--majority-vote", action="store_true",
                   help="also report document-level NMI after majority voting")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "eval":
            return cmd_eval(args.labels, args.truth, args.majority_vote)
        overrides = {k: v for k, v in vars(args).items()
                     if k not in ("command", "config")}
        cfg = io.load_config(args.config, overrides)
        if args.command == "generate":
            return cmd_generate(cfg)
        return cmd_fit(cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (DataFormatError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except (NumericalError, InvariantError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
