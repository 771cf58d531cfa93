"""
Command-line entry point: synth, flow, deblur, denoise, restore and eval.

Exit codes: 0 on success, 1 on a processing failure, 2 on a usage error. Every command prints
a one-line JSON summary on stdout; logs go to stderr.
"""
import argparse
import json
import logging
import os
import shutil
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence

from dotenv import load_dotenv

from dualcam.Deblur.deconvolver import deconvolve_with_trace
from dualcam.Deblur.trajectory import build_trajectories
from dualcam.Denoise.burst_merger import merge_burst_with_weights
from dualcam.Flow.flo_io import read_flow_dir, write_flo
from dualcam.Flow.flow_field import FlowField
from dualcam.Flow.lucas_kanade import estimate_flow
from dualcam.Fusion.restorer import Restorer
from dualcam.Imaging.image_buffer import ImageBuffer
from dualcam.Imaging.image_io import load_image, save_image
from dualcam.Imaging.tensor_io import write_tensor
from dualcam.Metrics.evaluator import evaluate_dir, evaluate_pair
from dualcam.Project.cli_config import CliConfig
from dualcam.Synthesizer.dataset_builder import INDEX_FILE, DatasetBuilder, triplet_dir_name
from dualcam.Synthesizer.validator import find_missing_burst, list_burst_files

logger = logging.getLogger(__name__)

THREADS_ENV = 'DUALCAM_THREADS'
DEBLURRED_FILE = 'deblurred.png'
DENOISED_FILE = 'denoised.png'
WEIGHTS_FILE = 'weights.dckt'
# eval prints the bare metric report.
TIMED_COMMANDS = ('synth', 'flow', 'deblur', 'denoise', 'restore')


class UsageError(Exception):
    """Bad flags or inputs; reported with exit code 2."""


class OutputTracker:
    """
    Files and directories a command creates, removed again if the command fails.
    """

    def __init__(self):
        self.paths: list[str] = []

    def add(self, path: str) -> str:
        self.paths.append(path)
        return path

    def remove_all(self) -> None:
        for path in self.paths:
            if os.path.isdir(path):
                shutil.rmtree(path, ignore_errors=True)
            elif os.path.exists(path):
                os.remove(path)
                logger.info(f"[Cli] Removed partial output {path}")


def emit(summary: dict) -> None:
    print(json.dumps(summary, separators=(',', ':')))


def require_file(path: str) -> str:
    if not os.path.isfile(path):
        raise UsageError(f"Input file not found: {path}")
    return path


def load_burst(burst_dir: str) -> list[ImageBuffer]:
    """
    Load burst_0.png ... burst_{N-1}.png in index order.

    :raises UsageError: If the directory is missing, a frame is missing or N is even.
    """
    if not os.path.isdir(burst_dir):
        raise UsageError(f"Burst directory not found: {burst_dir}")
    paths = list_burst_files(burst_dir)
    if not paths:
        raise UsageError(f"No burst_<i>.png files in {burst_dir}")
    missing = find_missing_burst(burst_dir)
    if missing:
        raise UsageError(f"Missing burst file: {missing[0]}")
    if len(paths) % 2 == 0:
        raise UsageError(f"Burst size must be odd, found {len(paths)} frames in {burst_dir}")
    return [load_image(path) for path in paths]


def load_flows(flow_dir: str | None, n: int) -> list[FlowField] | None:
    if flow_dir is None:
        return None
    try:
        return read_flow_dir(flow_dir, n)
    except FileNotFoundError as error:
        raise UsageError(str(error)) from error


def estimate_burst_flows(burst: Sequence[ImageBuffer], config: CliConfig, threads: int) -> list[FlowField]:
    restorer = Restorer(flow_cfg=config.flow, threads=threads)
    with ThreadPoolExecutor(max_workers=restorer.threads) as pool:
        return restorer.estimate_flows(burst, pool)


def cmd_synth(args: argparse.Namespace, config: CliConfig, outputs: OutputTracker) -> dict:
    builder = DatasetBuilder(args.input_dir, args.output_dir, config.synth, args.threads)
    try:
        groups = builder.plan()
    except (FileNotFoundError, ValueError) as error:
        raise UsageError(str(error)) from error
    if not os.path.isdir(args.output_dir):
        outputs.add(args.output_dir)
    else:
        names = [triplet_dir_name(index) for index in range(len(groups))] + [INDEX_FILE]
        for name in names:
            path = os.path.join(args.output_dir, name)
            if not os.path.exists(path):
                outputs.add(path)
    entries = builder.run()
    return {'triplets': len(entries), 'frames': sum(len(group) for group in groups)}


def cmd_flow(args: argparse.Namespace, config: CliConfig, outputs: OutputTracker) -> dict:
    ref = load_image(require_file(args.ref))
    tgt = load_image(require_file(args.tgt))
    flow = estimate_flow(ref, tgt, config.flow)
    write_flo(flow, outputs.add(args.out))
    return {'width': flow.width, 'height': flow.height, 'mean_magnitude': float(flow.magnitude().mean())}


def cmd_deblur(args: argparse.Namespace, config: CliConfig, outputs: OutputTracker) -> dict:
    long = load_image(require_file(args.long))
    burst = load_burst(args.burst_dir)
    flows = load_flows(args.flow_dir, len(burst)) or estimate_burst_flows(burst, config, args.threads)
    trajectory = build_trajectories(flows, args.kernel)

    result = deconvolve_with_trace(long, trajectory, config.deconv, config.isp)
    non_increasing = all(b <= a for a, b in zip(result.trace, result.trace[1:]))
    logger.info(f"[Deblur] Data fit trace non-increasing: {non_increasing}")
    save_image(result.image, outputs.add(args.out))
    if args.trajectory_out:
        write_tensor(trajectory.to_tensor(), outputs.add(args.trajectory_out))
    return {'iterations': result.iterations, 'initial_fit': result.trace[0], 'final_fit': result.trace[-1],
            'non_increasing': non_increasing}


def cmd_denoise(args: argparse.Namespace, config: CliConfig, outputs: OutputTracker) -> dict:
    burst = load_burst(args.burst_dir)
    flows = load_flows(args.flow_dir, len(burst)) or estimate_burst_flows(burst, config, args.threads)
    merged, weights = merge_burst_with_weights(burst, flows, config.merge, config.isp)
    save_image(merged, outputs.add(args.out))
    if args.weights_out:
        write_tensor(weights.to_tensor(), outputs.add(args.weights_out))
    reference_weight = float(weights.weights[len(burst) // 2].mean())
    return {'frames': len(burst), 'reference_weight': reference_weight}


def cmd_restore(args: argparse.Namespace, config: CliConfig, outputs: OutputTracker) -> dict:
    long = load_image(require_file(args.long))
    burst = load_burst(args.burst_dir)
    flows = load_flows(args.flow_dir, len(burst))

    restorer = Restorer(config.flow, config.deconv, config.merge, config.fusion, config.isp,
                        kernel=args.kernel, threads=args.threads)
    result = restorer.run(long, burst, flows)
    save_image(result.image, outputs.add(args.out))

    if args.dump_intermediates:
        out_dir = os.path.dirname(os.path.abspath(args.out))
        save_image(result.deblurred, outputs.add(os.path.join(out_dir, DEBLURRED_FILE)))
        save_image(result.denoised, outputs.add(os.path.join(out_dir, DENOISED_FILE)))
        write_tensor(result.weights.to_tensor(), outputs.add(os.path.join(out_dir, WEIGHTS_FILE)))
    return {'frames': len(burst), 'deconv_iterations': len(result.trace) - 1,
            'flows': 'file' if flows is not None else 'estimated'}


def cmd_eval(args: argparse.Namespace, config: CliConfig, outputs: OutputTracker) -> dict:
    if os.path.isdir(args.pred) and os.path.isdir(args.gt):
        report = evaluate_dir(args.pred, args.gt, args.threads)
        details = {**report.to_dict(), 'images': report.entries.to_dict(orient='records')}
    else:
        report = evaluate_pair(require_file(args.pred), require_file(args.gt))
        details = report.to_dict()
    if args.out:
        with open(outputs.add(args.out), 'w', encoding='utf-8') as file:
            json.dump(details, file, indent=2)
    return report.to_dict()


def apply_overrides(args: argparse.Namespace, config: CliConfig) -> CliConfig:
    """
    Flags win over config file values. Subcommands without a flag leave the section alone.
    """
    def flag(name: str):
        return getattr(args, name, None)

    config = config.with_overrides('synth', n=flag('n'), ratio=flag('ratio'), seed=flag('seed'))
    config = config.with_overrides('flow', levels=flag('levels'), window=flag('window'))
    config = config.with_overrides('deconv', max_iters=flag('iters'), method=flag('method'))
    config = config.with_overrides('merge', tau=flag('tau'), patch=flag('patch'))
    return config.with_overrides('fusion', mode=flag('mode'))


def default_threads() -> int:
    value = os.environ.get(THREADS_ENV)
    if value:
        try:
            return max(1, int(value))
        except ValueError:
            logger.warning(f"[Cli] Ignoring non-integer {THREADS_ENV}={value!r}")
    return os.cpu_count() or 1


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='YAML or JSON file with isp/synth/flow/deconv/merge/fusion sections.')
    common.add_argument('--threads', type=int, default=None,
                        help=f'Worker count (default: ${THREADS_ENV} or the number of cores).')
    common.add_argument('--log-level', default='INFO', choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'])

    parser = argparse.ArgumentParser(prog='dualcam', description='Dual-camera long/short exposure restoration.')
    commands = parser.add_subparsers(dest='command', required=True)

    synth = commands.add_parser('synth', parents=[common], help='Synthesize capture triplets from frame sequences.')
    synth.add_argument('--input-dir', required=True)
    synth.add_argument('--output-dir', required=True)
    synth.add_argument('--n', type=int)
    synth.add_argument('--ratio', type=float)
    synth.add_argument('--seed', type=int)
    synth.set_defaults(handler=cmd_synth)

    flow = commands.add_parser('flow', parents=[common], help='Estimate the flow from one image to another.')
    flow.add_argument('--ref', required=True)
    flow.add_argument('--tgt', required=True)
    flow.add_argument('--out', required=True, help='Output .flo file.')
    flow.add_argument('--levels', type=int)
    flow.add_argument('--window', type=int)
    flow.set_defaults(handler=cmd_flow)

    deblur = commands.add_parser('deblur', parents=[common], help='Deconvolve the long exposure along burst trajectories.')
    deblur.add_argument('--long', required=True)
    deblur.add_argument('--burst-dir', required=True)
    deblur.add_argument('--out', required=True)
    deblur.add_argument('--flow-dir')
    deblur.add_argument('--iters', type=int)
    deblur.add_argument('--method', choices=['landweber', 'richardson_lucy'])
    deblur.add_argument('--kernel', type=int, default=3)
    deblur.add_argument('--trajectory-out', help='Optional DCKT sidecar for the trajectory field.')
    deblur.set_defaults(handler=cmd_deblur)

    denoise = commands.add_parser('denoise', parents=[common], help='Align and merge the burst.')
    denoise.add_argument('--burst-dir', required=True)
    denoise.add_argument('--out', required=True)
    denoise.add_argument('--flow-dir')
    denoise.add_argument('--tau', type=float)
    denoise.add_argument('--patch', type=int)
    denoise.add_argument('--weights-out', help='Optional DCKT sidecar for the merge weights.')
    denoise.set_defaults(handler=cmd_denoise)

    restore = commands.add_parser('restore', parents=[common], help='Run the joint deblur + denoise pipeline.')
    restore.add_argument('--long', required=True)
    restore.add_argument('--burst-dir', required=True)
    restore.add_argument('--out', required=True)
    restore.add_argument('--flow-dir')
    restore.add_argument('--iters', type=int)
    restore.add_argument('--mode', choices=['residual_confidence', 'luma_chroma', 'average'])
    restore.add_argument('--kernel', type=int, default=3)
    restore.add_argument('--dump-intermediates', action='store_true',
                         help=f'Also write {DEBLURRED_FILE}, {DENOISED_FILE} and {WEIGHTS_FILE} next to --out.')
    restore.set_defaults(handler=cmd_restore)

    evaluate = commands.add_parser('eval', parents=[common], help='PSNR/SSIM of a prediction against ground truth.')
    evaluate.add_argument('--pred', required=True, help='Image file or directory.')
    evaluate.add_argument('--gt', required=True, help='Image file or directory.')
    evaluate.add_argument('--out', help='Optional JSON report file.')
    evaluate.set_defaults(handler=cmd_eval)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    load_dotenv()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exit_:
        return int(exit_.code or 0)

    logging.basicConfig(stream=sys.stderr, format='%(levelname)s %(name)s: %(message)s')
    logging.getLogger().setLevel(args.log_level)
    if args.threads is None:
        args.threads = default_threads()

    handler: Callable = args.handler
    outputs = OutputTracker()
    started = time.perf_counter()
    try:
        try:
            config = apply_overrides(args, CliConfig.from_file(args.config))
        except (FileNotFoundError, ValueError) as error:
            raise UsageError(str(error)) from error
        summary = handler(args, config, outputs)
    except UsageError as error:
        logger.error(f"[Cli] {error}")
        outputs.remove_all()
        return 2
    except Exception:
        logger.exception(f"[Cli] {args.command} failed")
        outputs.remove_all()
        return 1

    if args.command in TIMED_COMMANDS:
        summary['seconds'] = round(time.perf_counter() - started, 3)
    emit(summary)
    return 0
