"""Command-line entry point.

Subcommands: superpose, check-grads, count, train, ablate, phase-map,
selftest. Output is machine-parsable key=value lines; the seed in effect is
always printed. Exit codes: 0 success, 1 a check failed or training aborted,
2 usage error (argparse's convention). The WAVEMLP_THREADS environment
variable caps ablation worker processes (default 1).
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import model as M
from . import wave
from .errors import WaveMlpError
from .selftest import check_gradients, load_pilot, pilot_task_config, run_selftest
from .synth import SynthTask, make_dataset
from .tensor import Tensor, grad_check, mul, reduce_mean
from .train import ABLATION_AXES, TrainConfig, ablate, train

PRESET_CHOICES = ["T*", "T", "S", "M", "B", "tiny"]
FLOP_CONVENTION = "1 MAC = 1 FLOP over matmuls, windowed mixing, and stems; elementwise excluded"


def _kv(key, value):
    print(f"{key}={value}")


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    p.add_argument("--out", default="out", help="output directory for files")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wavemlp", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("superpose", help="superpose two waves; closed forms vs oracle")
    p.add_argument("--a1", type=float, required=True)
    p.add_argument("--a2", type=float, required=True)
    p.add_argument("--t1", type=float, required=True)
    p.add_argument("--t2", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("count", help="parameter/FLOP accounting for a preset or config")
    p.add_argument("--preset", choices=PRESET_CHOICES, default="T")
    p.add_argument("--config", help="JSON ArchConfig (overrides --preset)")
    p.add_argument("--res", type=int, default=224, help="square input resolution")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("check-grads", help="finite-difference gradient suite")
    p.add_argument("--config", help="also grad-check a model built from this JSON config")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-4)

    p = sub.add_parser("train", help="train a model on a synthetic task")
    p.add_argument("--preset", choices=PRESET_CHOICES, default="tiny")
    p.add_argument("--config", help="JSON ArchConfig (overrides --preset)")
    p.add_argument("--task", choices=["interference", "blobs"], default="interference")
    p.add_argument("--epochs", type=int, default=None, help="default: committed pilot value")
    p.add_argument("--batch", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--wd", type=float, default=None)
    p.add_argument("--precision", choices=["f32", "f64"], default=None)
    _add_common(p)

    p = sub.add_parser("ablate", help="run one ablation axis, emit its CSV table")
    p.add_argument("--axis", choices=sorted(ABLATION_AXES), required=True)
    p.add_argument("--task", choices=["interference", "blobs"], default="interference")
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--num-seeds", type=int, default=3)
    _add_common(p)

    p = sub.add_parser("phase-map", help="train briefly, export a phase-difference map")
    p.add_argument("--stage", type=int, choices=[3, 4], default=4)
    p.add_argument("--epochs", type=int, default=4)
    p.add_argument("--window", type=int, default=None)
    _add_common(p)

    p = sub.add_parser("selftest", help="run the invariant suite; exit 0 iff all pass")
    p.add_argument("--full", action="store_true", help="include the committed pilot training run")
    p.add_argument("--seed", type=int, default=0)

    return parser


def _cmd_superpose(args) -> int:
    _kv("seed", args.seed)
    amp = float(wave.superpose_amplitude(args.a1, args.a2, args.t1, args.t2))
    ora = wave.oracle_superpose(args.a1, args.a2, args.t1, args.t2)
    _kv("amplitude", repr(amp))
    _kv("oracle_amplitude", repr(float(ora.amplitude)))
    if amp >= wave.ZERO_AMPLITUDE:
        phase = float(wave.superpose_phase(args.a1, args.a2, args.t1, args.t2))
        _kv("phase", repr(phase))
        _kv("oracle_phase", repr(float(ora.phase)))
        circ = float(abs(wave.canonicalize_phase(phase - float(ora.phase))))
        _kv("phase_circular_err", repr(circ))
    else:
        _kv("phase", "undefined (amplitude ~ 0; amplitudes compared only)")
    _kv("amplitude_abs_err", repr(abs(amp - float(ora.amplitude))))
    return 0


def _load_cfg(args):
    if getattr(args, "config", None):
        return M.load_arch_config(args.config)
    return M.preset(args.preset)


def _cmd_count(args) -> int:
    _kv("seed", args.seed)
    cfg = _load_cfg(args)
    m = M.build(cfg, seed=args.seed)
    n_params = M.count_params(m)
    n_flops = M.count_flops(m, args.res, args.res)
    if args.config:
        _kv("config", args.config)
    else:
        _kv("preset", args.preset)
    _kv("res", args.res)
    _kv("params", n_params)
    _kv("flops", n_flops)
    _kv("flop_convention", FLOP_CONVENTION)
    code = 0
    if not args.config and args.preset in M.REFERENCE_BUDGETS and args.res == 224:
        ref_p, ref_f = M.REFERENCE_BUDGETS[args.preset]
        ok_p = abs(n_params - ref_p) <= 0.10 * ref_p
        ok_f = abs(n_flops - ref_f) <= 0.10 * ref_f
        _kv("params_ref", int(ref_p))
        _kv("params_within_10pct", "PASS" if ok_p else "FAIL")
        _kv("flops_ref", int(ref_f))
        _kv("flops_within_10pct", "PASS" if ok_f else "FAIL")
        code = 0 if (ok_p and ok_f) else 1
    return code


def _cmd_check_grads(args) -> int:
    _kv("seed", args.seed)
    results = check_gradients(seed=args.seed, tol=args.tol)
    for r in results:
        print(r.line())
    ok = all(r.passed for r in results)
    if args.config:
        cfg = M.load_arch_config(args.config)
        m = M.build(cfg, seed=args.seed)
        rng = np.random.default_rng(args.seed)
        x = Tensor(rng.normal(size=(1, 8, 8, cfg.input_channels)), requires_grad=True)
        tensors = [x] + [t for _, t in M.iter_params(m)]
        rep = grad_check(
            lambda ts: reduce_mean(mul(M.forward(m, x), M.forward(m, x))), tensors, tol=args.tol
        )
        _kv("grad_config_model", "PASS" if rep.passed else "FAIL")
        _kv("grad_config_model_max_rel_err", f"{rep.max_rel_err:.3e}")
        ok = ok and rep.passed
    _kv("all_grads", "PASS" if ok else "FAIL")
    return 0 if ok else 1


def _train_config(args) -> TrainConfig:
    doc = load_pilot()["train"]
    return TrainConfig(
        epochs=args.epochs if args.epochs is not None else doc["epochs"],
        batch_size=args.batch if getattr(args, "batch", None) is not None else doc["batch_size"],
        lr=args.lr if getattr(args, "lr", None) is not None else doc["lr"],
        weight_decay=args.wd if getattr(args, "wd", None) is not None else doc["weight_decay"],
        seed=args.seed,
        precision=getattr(args, "precision", None) or doc["precision"],
    )


def _cmd_train(args) -> int:
    import dataclasses

    _kv("seed", args.seed)
    cfg = _load_cfg(args)
    task = SynthTask(name=args.task, num_classes=cfg.num_classes if cfg.num_classes in (2, 4) else 4)
    if cfg.num_classes != task.num_classes:
        cfg = dataclasses.replace(cfg, num_classes=task.num_classes)
    tc = _train_config(args)
    _kv("task", task.name)
    _kv("epochs", tc.epochs)
    _kv("lr", repr(tc.lr))
    try:
        _model, hist = train(cfg, task, tc)
    except WaveMlpError as exc:
        _kv("error", exc)
        return 1
    _kv("steps", len(hist.loss))
    _kv("final_loss", repr(hist.loss[-1]))
    _kv("final_train_acc", repr(hist.train_acc[-1]))
    _kv("final_val_acc", repr(hist.val_acc[-1]))
    losses, accs = hist.save(args.out)
    _kv("losses_csv", losses)
    _kv("accuracy_csv", accs)
    return 0


def _cmd_ablate(args) -> int:
    _kv("seed", args.seed)
    task = SynthTask(name=args.task)
    tc = _train_config(args)
    seeds = tuple(range(args.seed, args.seed + args.num_seeds))
    _kv("axis", args.axis)
    _kv("seeds", ";".join(str(s) for s in seeds))
    table = ablate(args.axis, task, tc, seeds=seeds)
    path = table.save(args.out)
    for row in table.rows:
        _kv(f"row_{row.setting}_mean_val_acc", repr(row.mean))
        _kv(f"row_{row.setting}_sd_val_acc", repr(row.sd))
    _kv("table_csv", path)
    return 0


def _cmd_phase_map(args) -> int:
    from .phasemap import export_phase_map

    _kv("seed", args.seed)
    task, tc_full = pilot_task_config()
    tc = TrainConfig(
        epochs=args.epochs,
        batch_size=tc_full.batch_size,
        lr=tc_full.lr,
        weight_decay=tc_full.weight_decay,
        seed=args.seed,
    )
    model, hist = train(M.preset("tiny"), task, tc)
    _kv("final_val_acc", repr(hist.val_acc[-1]))
    image = make_dataset(task)[0][0]
    csv_path, pgm_path = export_phase_map(model, image, args.stage, args.out, window=args.window)
    _kv("stage", args.stage)
    _kv("csv", csv_path)
    _kv("pgm", pgm_path)
    return 0


def _cmd_selftest(args) -> int:
    _kv("seed", args.seed)
    results = run_selftest(full=args.full, seed=args.seed)
    for r in results:
        print(r.line())
    failed = [r for r in results if not r.passed]
    _kv("checks", len(results))
    _kv("failed", len(failed))
    _kv("selftest", "PASS" if not failed else "FAIL")
    return 0 if not failed else 1


_HANDLERS = {
    "superpose": _cmd_superpose,
    "count": _cmd_count,
    "check-grads": _cmd_check_grads,
    "train": _cmd_train,
    "ablate": _cmd_ablate,
    "phase-map": _cmd_phase_map,
    "selftest": _cmd_selftest,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except WaveMlpError as exc:
        print(f"error={type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
