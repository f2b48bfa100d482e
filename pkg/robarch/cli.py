#!/usr/bin/env python3
# SPDX-License-Identifier: BSD-3-Clause
# Copyright(C) 2026 robarch contributors
# Authors:
#   robarch contributors

""" Module cli

Command line surface of the workbench.

   * run_command(argv) -> exit code
   * main()

Exit codes: 0 on success, 1 on a domain or I/O error, 2 on a usage error.
Results go to stdout or to the file given with -o; diagnostics go to
stderr through the logging module.
"""




import argparse
import fractions
import logging
import sys

import numpy as np

from .adversarial import AttackConfig
from .adversarial import TrainConfig
from .adversarial import TrainMethod
from .adversarial import evaluate_clean
from .adversarial import evaluate_robust
from .adversarial import fgsm
from .adversarial import pgd
from .adversarial import train
from .archspec import RobustifyPrinciple
from .archspec import WdRange
from .archspec import component_variants
from .archspec import count_params
from .archspec import robustify_all
from .archspec import robustify_step
from .archspec import roadmap
from .archspec import wd_ratio
from .common import Check
from .common import RobarchError
from .common import SpecValidationError
from .common import format_real
from .data import Dataset
from .data import gen_synthetic
from .data import load_dataset_any
from .data import save_dataset
from .data import write_cifar10_bin
from .designspace import SampleBounds
from .designspace import compute_edf
from .designspace import edf_to_csv
from .designspace import partition_by_range
from .designspace import pearson
from .designspace import sample_population
from .designspace import samples_from_csv
from .designspace import samples_to_csv
from .designspace import top_fraction_range
from .netbuild import build_network
from .specfile import emit_spec
from .specfile import load_spec
from .specfile import parse_spec

from .logger import get_logger
from .logger import setup_root_logger


logger = get_logger(__name__)




def real(text):
    """Reals, also written as fractions such as 8/255."""
    try:
        return float(fractions.Fraction(text.strip()))
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"invalid real '{text}'")


def real_list(text):
    return [real(item) for item in text.split(",")]


def int_list(text):
    try:
        return [int(item) for item in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid integer list '{text}'")


def natural(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid integer '{text}'")
    if not Check.is_natural(value):
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got '{text}'")
    return value


def int_pair(text):
    values = int_list(text)
    if len(values) != 2:
        raise argparse.ArgumentTypeError(f"expected lo,hi, got '{text}'")
    return tuple(values)


def shape(text):
    values = int_list(text)
    if len(values) != 3:
        raise argparse.ArgumentTypeError(f"expected C,H,W, got '{text}'")
    return tuple(values)


def stage_table(text):
    """D:W pairs separated by commas, e.g. 5:36,8:72,13:140,1:270."""
    try:
        table = [tuple(int(v) for v in item.split(":")) for item in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid stage table '{text}'")
    if any(len(pair) != 2 for pair in table):
        raise argparse.ArgumentTypeError(f"stage table items must be D:W, got '{text}'")
    return table




def _write(args, text):

    if getattr(args, "output", None):
        with open(args.output, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _network(args, spec, input_shape):

    net = build_network(spec, input_shape, args.seed)
    if getattr(args, "weights", None):
        net.load_weights(args.weights)

    return net




def cmd_wd_ratio(args):
    spec = load_spec(args.spec)
    _write(args, f"{wd_ratio(spec):.2f}\n")
    return 0


def cmd_params(args):
    spec = load_spec(args.spec)
    _write(args, f"{count_params(spec, args.input_channels)}\n")
    return 0


def cmd_validate(args):

    with open(args.spec, encoding="utf-8") as f:
        text = f.read()

    try:
        parse_spec(text)
    except SpecValidationError as ex:
        _write(args, "".join(f"{v}\n" for v in ex.violations))
        return 1

    _write(args, "ok\n")
    return 0


def cmd_robustify(args):

    spec = load_spec(args.spec)

    if args.all:
        spec = robustify_all(spec)
    else:
        spec = robustify_step(spec, RobustifyPrinciple(args.step), args.stages)

    _write(args, emit_spec(spec))
    return 0


def cmd_sample(args):

    template = load_spec(args.template)
    budget = tuple(args.budget) if args.budget else None
    bounds = SampleBounds(tuple(args.n_choices), args.max_depth, args.max_width, budget)

    samples = sample_population(args.seed, args.count, bounds, template, args.input_channels)

    _write(args, samples_to_csv(samples))
    return 0


def cmd_edf(args):

    with open(args.samples, encoding="utf-8") as f:
        samples = samples_from_csv(f.read())

    scored = [s for s in samples if s.error is not None]
    wd_range = WdRange(args.lo, args.hi)
    inside, outside = partition_by_range(scored, wd_range)

    curves = [("all", compute_edf([s.error for s in scored])),
              ("inside", compute_edf([s.error for s in inside])),
              ("outside", compute_edf([s.error for s in outside]))]

    _write(args, edf_to_csv(curves))

    if len(scored) >= 2:
        try:
            r = pearson([s.wd for s in scored], [s.error for s in scored])
            print(f"pearson(wd, error) = {r:.4f}", file=sys.stderr)
        except RobarchError as ex:
            print(f"pearson(wd, error) undefined: {ex}", file=sys.stderr)

        best = top_fraction_range(scored, fraction=args.top_fraction)
        if best is None:
            print("top-fraction WD spans do not overlap", file=sys.stderr)
        else:
            print(f"top-fraction WD range = [{best.lo:.2f}, {best.hi:.2f}]", file=sys.stderr)

    return 0


def cmd_build_describe(args):

    spec = load_spec(args.spec)
    net = build_network(spec, args.input, args.seed)

    if args.trace:
        text = "section,shape\n" + "".join(f"{label},{'x'.join(str(n) for n in s)}\n" for label, s in net.shape_trace())
    elif args.csv:
        text = net.describe().to_csv()
    else:
        text = net.describe().to_text()

    _write(args, text)
    return 0


def cmd_train(args):

    spec = load_spec(args.spec)
    dataset = load_dataset_any(args.data, args.limit)
    net = build_network(spec, dataset.sample_shape, args.seed)

    method = TrainMethod(args.method)
    if method == TrainMethod.FAST_AT:
        attack = AttackConfig.fast_at(args.eps)
    else:
        attack = AttackConfig.pgd(args.eps, args.steps)

    cfg = TrainConfig(method, args.epochs, args.batch_size, args.lr_max, args.weight_decay, args.seed,
                      attack, beta=args.beta, eval_samples=args.eval_samples,
                      eval_attack=AttackConfig.pgd(args.eps, args.eval_steps))

    report = train(net, dataset, cfg)

    if args.weights_out:
        net.save_weights(args.weights_out)

    _write(args, report.to_csv())
    print(f"parameter hash {net.parameter_hash()}", file=sys.stderr)

    return 0


def cmd_attack(args):

    spec = load_spec(args.spec)
    dataset = load_dataset_any(args.data, args.limit)
    net = _network(args, spec, dataset.sample_shape)

    rng = np.random.default_rng(args.seed)

    if args.method == "fgsm":
        alpha = args.alpha if args.alpha is not None else AttackConfig.fast_at(args.eps).alpha
        x_adv = fgsm(net, dataset.images, dataset.labels, args.eps, alpha, args.random_start, rng)
    else:
        attack = AttackConfig.pgd(args.eps, args.steps, args.random_start, args.best_iterate)
        if args.alpha is not None:
            attack = AttackConfig(args.eps, args.alpha, args.steps, args.random_start, args.best_iterate)
        x_adv = pgd(net, dataset.images, dataset.labels, attack, rng)

    adversarial = Dataset(x_adv, dataset.labels, dataset.class_count, f"{args.method}:{dataset.provenance}")
    save_dataset(adversarial, args.output)

    accuracy = float((net.predict(x_adv) == dataset.labels).mean())
    print(f"{format_real(accuracy)}")

    return 0


def cmd_evaluate(args):

    spec = load_spec(args.spec)
    dataset = load_dataset_any(args.data, args.limit)
    net = _network(args, spec, dataset.sample_shape)

    _, clean = evaluate_clean(net, dataset)

    lines = ["eps,steps,accuracy", f"clean,0,{format_real(clean)}"]
    for eps in args.eps:
        attack = AttackConfig.pgd(eps, args.steps, args.random_start, args.best_iterate)
        accuracy = evaluate_robust(net, dataset, attack, args.seed, args.batch_size, args.workers)
        lines.append(f"{format_real(eps)},{args.steps},{format_real(accuracy)}")

    _write(args, "\n".join(lines) + "\n")
    return 0


def cmd_gen_data(args):

    dataset = gen_synthetic(args.seed, args.n, args.size, args.classes, args.channels, args.noise,
                            conflict=args.conflict)

    if args.format == "cifar10":
        write_cifar10_bin(dataset, args.output)
    else:
        save_dataset(dataset, args.output)

    print(dataset.digest(), file=sys.stderr)
    return 0


def cmd_variants(args):

    spec = load_spec(args.spec)

    lines = ["label,name,params,wd"]
    for label, variant in component_variants(spec):
        lines.append(f"{label},{variant.name},{count_params(variant, args.input_channels)},{format_real(wd_ratio(variant))}")

    _write(args, "\n".join(lines) + "\n")
    return 0


def cmd_roadmap(args):

    spec = load_spec(args.spec)

    lines = ["step,name,params,wd"]
    for label, step in roadmap(spec):
        lines.append(f"{label},{step.name},{count_params(step, args.input_channels)},{format_real(wd_ratio(step))}")

    _write(args, "\n".join(lines) + "\n")
    return 0




def build_parser():

    parser = argparse.ArgumentParser(prog="robarch", description='Robust CNN architecture workbench.')
    parser.add_argument('-v', '--verbose', action='store_true', help='Log progress at INFO level')
    parser.add_argument('--log-file', type=str, default=None, help='Write the log to this file instead of stderr')

    commands = parser.add_subparsers(dest='command', metavar='command')
    commands.required = True

    def command(name, handler, help_text):
        sub = commands.add_parser(name, help=help_text, description=help_text)
        sub.set_defaults(handler=handler)
        return sub

    def output(sub):
        sub.add_argument('-o', '--output', type=str, default=None, help='Output file (default: stdout)')

    sub = command('wd-ratio', cmd_wd_ratio, 'Print the WD ratio of a spec file')
    sub.add_argument('spec', type=str, help='Spec file')
    output(sub)

    sub = command('params', cmd_params, 'Print the parameter count of a spec file')
    sub.add_argument('spec', type=str, help='Spec file')
    sub.add_argument('--input-channels', type=int, default=3, help='Input image channels')
    output(sub)

    sub = command('validate', cmd_validate, 'List the invariant violations of a spec file')
    sub.add_argument('spec', type=str, help='Spec file')
    output(sub)

    sub = command('robustify', cmd_robustify, 'Apply robustify steps and emit the resulting spec')
    sub.add_argument('spec', type=str, help='Spec file')
    steps = sub.add_mutually_exclusive_group(required=True)
    steps.add_argument('--all', action='store_true', help='Apply DepthWidth, ConvStem, SqueezeExcite and SmoothAct')
    steps.add_argument('--step', type=str, choices=[p.value for p in RobustifyPrinciple], help='Apply a single step')
    sub.add_argument('--stages', type=stage_table, default=None, help='Stage table for DepthWidth, e.g. 5:36,8:72,13:140,1:270')
    output(sub)

    sub = command('sample', cmd_sample, 'Sample random stage configurations around a template spec')
    sub.add_argument('--template', type=str, required=True, help='Spec file supplying stem, block, activation and head')
    sub.add_argument('--count', type=int, required=True, help='Number of samples')
    sub.add_argument('--seed', type=natural, required=True, help='Seed of the first sample')
    sub.add_argument('--n-choices', type=int_list, default=[3, 4, 5, 6], help='Allowed stage counts')
    sub.add_argument('--max-depth', type=int, default=60, help='Largest stage depth')
    sub.add_argument('--max-width', type=int, default=1000, help='Largest stage width')
    sub.add_argument('--budget', type=int_pair, default=None, help='Parameter budget lo,hi')
    sub.add_argument('--input-channels', type=int, default=3, help='Input image channels')
    output(sub)

    sub = command('edf', cmd_edf, 'Error EDFs of a sample table, split by WD range')
    sub.add_argument('samples', type=str, help='Sample table CSV with an error column')
    sub.add_argument('--lo', type=real, default=7.5, help='Lower end of the WD range')
    sub.add_argument('--hi', type=real, default=13.5, help='Upper end of the WD range')
    sub.add_argument('--top-fraction', type=real, default=0.1, help='Fraction of best samples for the range report')
    output(sub)

    sub = command('build-describe', cmd_build_describe, 'Build a network and list its parameter tensors')
    sub.add_argument('spec', type=str, help='Spec file')
    sub.add_argument('--input', type=shape, default=(3, 32, 32), help='Input shape C,H,W')
    sub.add_argument('--seed', type=natural, default=0, help='Initialization seed')
    sub.add_argument('--csv', action='store_true', help='CSV instead of aligned text')
    sub.add_argument('--trace', action='store_true', help='Print the per-section output shapes instead')
    output(sub)

    sub = command('train', cmd_train, 'Train a spec on a dataset and emit the per-epoch report')
    sub.add_argument('spec', type=str, help='Spec file')
    sub.add_argument('--data', type=str, required=True, help='Dataset snapshot or CIFAR-10 binary file')
    sub.add_argument('--limit', type=natural, default=None, help='Use at most this many samples')
    sub.add_argument('--method', type=str, choices=[m.value for m in TrainMethod], default='standard')
    sub.add_argument('--epochs', type=int, default=5)
    sub.add_argument('--batch-size', type=int, default=64)
    sub.add_argument('--lr-max', type=real, default=0.2)
    sub.add_argument('--weight-decay', type=real, default=5e-4)
    sub.add_argument('--eps', type=real, default=8 / 255, help='Attack budget, e.g. 8/255')
    sub.add_argument('--steps', type=int, default=10, help='PGD steps for SAT and TRADES')
    sub.add_argument('--beta', type=real, default=6.0, help='TRADES trade-off')
    sub.add_argument('--eval-samples', type=int, default=0, help='Samples used for the robust column')
    sub.add_argument('--eval-steps', type=int, default=10, help='PGD steps of the robust column')
    sub.add_argument('--seed', type=natural, required=True)
    sub.add_argument('--weights-out', type=str, default=None, help='Save the trained weights here')
    output(sub)

    for name, handler, help_text in (('attack', cmd_attack, 'Write the adversarial version of a dataset'),
                                     ('evaluate', cmd_evaluate, 'Clean and robust accuracy of trained weights')):
        sub = command(name, handler, help_text)
        sub.add_argument('spec', type=str, help='Spec file')
        sub.add_argument('--data', type=str, required=True, help='Dataset snapshot or CIFAR-10 binary file')
        sub.add_argument('--weights', type=str, default=None, help='Weights snapshot (default: fresh initialization)')
        sub.add_argument('--limit', type=natural, default=None, help='Use at most this many samples')
        sub.add_argument('--steps', type=int, default=10)
        sub.add_argument('--random-start', action='store_true')
        sub.add_argument('--best-iterate', action='store_true')
        sub.add_argument('--seed', type=natural, required=True)
        if name == 'attack':
            sub.add_argument('--method', type=str, choices=['fgsm', 'pgd'], default='pgd')
            sub.add_argument('--eps', type=real, default=8 / 255)
            sub.add_argument('--alpha', type=real, default=None, help='Step size (default: per-method convention)')
            sub.add_argument('-o', '--output', type=str, required=True, help='Adversarial dataset snapshot')
        else:
            sub.add_argument('--eps', type=real_list, default=[0.0, 2 / 255, 4 / 255, 8 / 255])
            sub.add_argument('--batch-size', type=int, default=128)
            sub.add_argument('--workers', type=int, default=1)
            output(sub)

    sub = command('gen-data', cmd_gen_data, 'Generate a synthetic dataset')
    sub.add_argument('--seed', type=natural, required=True)
    sub.add_argument('--n', type=int, required=True, help='Number of samples')
    sub.add_argument('--size', type=int, default=16, help='Image side')
    sub.add_argument('--classes', type=int, default=2)
    sub.add_argument('--channels', type=int, default=3)
    sub.add_argument('--noise', type=real, default=0.1)
    sub.add_argument('--conflict', type=real, default=0.0, help='Share of samples carrying another class grating')
    sub.add_argument('--format', type=str, choices=['snapshot', 'cifar10'], default='snapshot')
    sub.add_argument('-o', '--output', type=str, required=True)

    sub = command('variants', cmd_variants, 'Parameter count and WD ratio of the component variants of a spec')
    sub.add_argument('spec', type=str, help='Spec file')
    sub.add_argument('--input-channels', type=int, default=3)
    output(sub)

    sub = command('roadmap', cmd_roadmap, 'Parameter count and WD ratio after every robustify step')
    sub.add_argument('spec', type=str, help='Spec file')
    sub.add_argument('--input-channels', type=int, default=3)
    output(sub)

    return parser




def run_command(argv):

    parser = build_parser()

    try:
        args = parser.parse_args(argv)
    except SystemExit as ex:
        return ex.code if isinstance(ex.code, int) else 2

    setup_root_logger(args.log_file, logging.INFO if args.verbose else logging.WARNING)

    try:
        return args.handler(args)
    except RobarchError as ex:
        logger.error(f"{args.command}: {ex}")
        print(f"error: {ex}", file=sys.stderr)
        return 1
    except OSError as ex:
        logger.error(f"{args.command}: {ex}")
        print(f"error: {ex}", file=sys.stderr)
        return 1


def main():
    sys.exit(run_command(sys.argv[1:]))
