"""``tmse`` command-line entry point.

Every command prints its effective configuration, writes its outputs under
``--out`` and exits 0 on success. Failures exit nonzero after printing one
line of the form ``tmse-error kind=<tag> message=<text>`` on stderr.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import analysis
from .config import ConfigError, RunConfig, load_config
from .dsp import Waveform, WavError, load_wav, save_wav
from .enhance import enhance, oracle_for, to_feature
from .losses import si_sdr, snr
from .predictor import load_checkpoint, save_checkpoint
from .sampler import NumericalError
from .schedules import DomainError, VarianceSchedule
from .synth import dump_pairs, generate
from .training import prepare_pairs, train

logger = logging.getLogger("tmse")


class DataError(ValueError):
    pass


def _prepare(args, overrides=None) -> tuple[RunConfig, Path]:
    overrides = dict(overrides or {})
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "steps", None) is not None:
        overrides["n_steps"] = args.steps
    cfg = load_config(args.config, overrides)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    text = cfg.to_text()
    (out / "config.txt").write_text(text)
    print(f"# effective configuration (seed={cfg.seed})")
    print(text, end="")
    return cfg, out


def find_pairs(clean_dir, noisy_dir) -> list[tuple[str, Path, Path]]:
    """Match ``clean/<name>.wav`` with ``noisy/<name>.wav``; an unmatched file is an error."""
    clean = {p.name: p for p in Path(clean_dir).glob("*.wav")}
    noisy = {p.name: p for p in Path(noisy_dir).glob("*.wav")}
    if not clean and not noisy:
        raise DataError(f"no WAV files in {clean_dir} or {noisy_dir}")
    unmatched = sorted(set(clean) ^ set(noisy))
    if unmatched:
        raise DataError(f"files without a partner: {', '.join(unmatched)}")
    return [(name, clean[name], noisy[name]) for name in sorted(clean)]


def cmd_schedule_curves(args) -> int:
    cfg, out = _prepare(args)
    header, rows = analysis.schedule_curves(cfg.gamma, cfg.k, cfg.x0, cfg.x1, cfg.snr_sigma, cfg.grid_points)
    analysis.write_csv(out / "schedule_curves.csv", header, rows)
    return 0


def cmd_objective_variance(args) -> int:
    cfg, out = _prepare(args)
    header, rows = analysis.objective_variance(cfg.build_path(), cfg.mc_samples, cfg.variance_t_points,
                                               cfg.x0, cfg.x1, cfg.seed)
    analysis.write_csv(out / "objective_variance.csv", header, rows)
    return 0


def cmd_oracle_convergence(args) -> int:
    cfg, out = _prepare(args)
    pairs = analysis.random_pairs(cfg.convergence_instances, (2, cfg.convergence_freq, cfg.convergence_frames),
                                  cfg.seed)
    header, rows = analysis.oracle_convergence(cfg.build_path(), pairs, t_start=cfg.t_start, t_floor=cfg.t_floor)
    analysis.write_csv(out / "oracle_convergence.csv", header, [(int(n), e) for n, e in rows])
    return 0


def _load_dataset(cfg: RunConfig, args):
    if args.synthetic:
        return [(p.clean, p.noisy) for p in generate(cfg.synth_spec())]
    root = Path(args.data)
    waves = []
    for name, c, n in find_pairs(root / "clean", root / "noisy"):
        cw, nw = load_wav(c), load_wav(n)
        if len(cw) != len(nw):
            raise DataError(f"{name}: clean has {len(cw)} samples, noisy has {len(nw)}")
        waves.append((cw, nw))
    shortest = min(len(c) for c, _ in waves)
    if any(len(c) != shortest for c, _ in waves):
        logger.warning("cropping all utterances to %d samples for batching", shortest)
        waves = [(Waveform(c.samples[:shortest], c.sample_rate), Waveform(n.samples[:shortest], n.sample_rate))
                 for c, n in waves]
    return waves


def cmd_train(args) -> int:
    cfg, out = _prepare(args)
    waves = _load_dataset(cfg, args)
    dataset = prepare_pairs(waves, cfg.stft_config(), cfg.compression())
    predictor = cfg.build_predictor()
    result = train(dataset, cfg.build_path(), predictor, cfg.train_config(),
                   on_epoch=lambda e: print(f"epoch {e.epoch} total={e.total:.6f}", flush=True))
    result.to_csv(out / "losses.csv")
    save_checkpoint(predictor, out / "checkpoint.npz")
    return 0


def _input_files(inputs) -> list[Path]:
    files = []
    for item in inputs:
        p = Path(item)
        files.extend(sorted(p.glob("*.wav")) if p.is_dir() else [p])
    if not files:
        raise DataError("no input WAV files")
    return files


def cmd_enhance(args) -> int:
    cfg, out = _prepare(args)
    stft_cfg, comp = cfg.stft_config(), cfg.compression()
    predictor = None
    if args.checkpoint:
        predictor = load_checkpoint(args.checkpoint)
        n_freq = predictor.config_dict().get("n_freq")
        if n_freq != stft_cfg.n_freq:
            raise DataError(f"checkpoint expects {n_freq} frequency bins, the STFT config gives {stft_cfg.n_freq}")
    for path in _input_files(args.inputs):
        noisy = load_wav(path)
        if args.oracle_with:
            clean = load_wav(Path(args.oracle_with) / path.name)
            if len(clean) != len(noisy):
                raise DataError(f"{path.name}: oracle reference length differs from the input")
            pred = oracle_for(clean, stft_cfg, comp)
        else:
            pred = predictor
        wave = enhance(noisy, pred, cfg.build_path(), cfg.sampler_config(), stft_cfg, comp)
        save_wav(wave, out / path.name, encoding=cfg.wav_encoding)
        print(f"{path.name}: {len(wave)} samples", flush=True)
    return 0


def cmd_eval(args) -> int:
    _, out = _prepare(args)
    rows = []
    for name, ref_path, est_path in find_pairs(args.ref, args.est):
        est, ref = load_wav(est_path), load_wav(ref_path)
        if len(est) != len(ref):
            raise DataError(f"{name}: estimate has {len(est)} samples, reference has {len(ref)}")
        rows.append((name, si_sdr(est.samples, ref.samples), snr(est.samples, ref.samples)))
    vals = np.array([r[1:] for r in rows])
    rows.append(("mean", *vals.mean(axis=0)))
    rows.append(("std", *vals.std(axis=0)))
    analysis.write_csv(out / "eval.csv", ["file", "si_sdr_db", "snr_db"], rows)
    print(f"mean SI-SDR {vals[:, 0].mean():.3f} dB, mean SNR {vals[:, 1].mean():.3f} dB")
    return 0


def cmd_perturb_demo(args) -> int:
    cfg, out = _prepare(args)
    clean, noisy = load_wav(args.clean), load_wav(args.noisy)
    if len(clean) != len(noisy):
        raise DataError("clean and noisy files differ in length")
    stft_cfg, comp = cfg.stft_config(), cfg.compression()
    x0, x1 = to_feature(clean.samples, stft_cfg, comp), to_feature(noisy.samples, stft_cfg, comp)
    analysis.perturb_demo(x0, x1, VarianceSchedule(cfg.variance_schedule, cfg.sigma), out,
                          cfg.gamma, cfg.k, seed=cfg.seed)
    return 0


def cmd_synth(args) -> int:
    cfg, out = _prepare(args)
    pairs = generate(cfg.synth_spec())
    dump_pairs(pairs, out, encoding=cfg.wav_encoding)
    analysis.write_csv(out / "snr.csv", ["file", "snr_db"], [(f"{p.name}.wav", p.snr_db) for p in pairs])
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tmse", description="Target-matching speech enhancement toolkit.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def command(name, func, help_text, seed=True):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="key = value configuration file")
        p.add_argument("--out", required=True, help="output directory")
        if seed:
            p.add_argument("--seed", type=int, help="overrides the configured seed")
        p.set_defaults(func=func)
        return p

    command("schedule-curves", cmd_schedule_curves, "mean schedules and SNR curves", seed=False)
    command("objective-variance", cmd_objective_variance, "Monte-Carlo variance of FM vs TM targets")
    command("oracle-convergence", cmd_oracle_convergence, "Euler error vs steps with an exact predictor")

    p = command("train", cmd_train, "train a predictor")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--synthetic", action="store_true", help="generate the configured synthetic set")
    src.add_argument("--data", help="directory holding clean/ and noisy/")

    p = command("enhance", cmd_enhance, "enhance noisy WAV files", seed=False)
    which = p.add_mutually_exclusive_group(required=True)
    which.add_argument("--checkpoint")
    which.add_argument("--oracle-with", help="directory of matching clean files")
    p.add_argument("--steps", type=int, help="number of Euler steps")
    p.add_argument("inputs", nargs="+", help="noisy WAV files or directories")

    p = command("eval", cmd_eval, "SI-SDR and SNR of estimates against references", seed=False)
    p.add_argument("--est", required=True)
    p.add_argument("--ref", required=True)

    p = command("perturb-demo", cmd_perturb_demo, "perturbed spectrograms along each mean schedule")
    p.add_argument("--clean", required=True)
    p.add_argument("--noisy", required=True)

    command("synth", cmd_synth, "write the configured synthetic set as WAV pairs")
    return ap


_ERROR_TAGS = (
    (ConfigError, "config"),
    (WavError, "io"),
    (DataError, "data"),
    (NumericalError, "numerical"),
    (DomainError, "domain"),
    (OSError, "io"),
    (ValueError, "value"),
)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except Exception as exc:  # reported as a single tagged line
        tag = next((t for cls, t in _ERROR_TAGS if isinstance(exc, cls)), "internal")
        message = " ".join(str(exc).split()) or type(exc).__name__
        print(f"tmse-error kind={tag} message={message}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
