#!/usr/bin/env python3
# SPDX-License-Identifier: BSD-3-Clause
# Copyright(C) 2026 robarch contributors
# Authors:
#   robarch contributors

import dataclasses
import math
import unittest

from robarch import *

from .common import *




# Robustified architectures with their WD ratio and rounded parameter count
ROBUSTIFIED_ROWS = [
    ("ra-resnet50.spec", "RaResNet-50", 8.99, 26e6),
    ("ra-wrn-22-10.spec", "RaWRN-22-10", 12.62, 27e6),
    ("ra-wrn-28-10.spec", "RaWRN-28-10", 12.57, 37e6),
    ("ra-resnet101.spec", "RaResNet-101", 7.62, 46e6),
    ("ra-wrn-34-12.spec", "RaWRN-34-12", 11.20, 67e6),
    ("ra-wrn-101-2.spec", "RaWRN-101-2", 11.59, 104e6),
    ("ra-wrn-70-16.spec", "RaWRN-70-16", 10.57, 267e6),
]

BASELINE_FIXTURES = {
    "ResNet-50": ("resnet50.spec", "ra-resnet50.spec"),
    "ResNet-101": ("resnet101.spec", "ra-resnet101.spec"),
    "WRN-101-2": ("wrn-101-2.spec", "ra-wrn-101-2.spec"),
    "WRN-22-10": ("wrn-22-10.spec", "ra-wrn-22-10.spec"),
    "WRN-28-10": ("wrn-28-10.spec", "ra-wrn-28-10.spec"),
    "WRN-34-12": ("wrn-34-12.spec", "ra-wrn-34-12.spec"),
    "WRN-70-16": ("wrn-70-16.spec", "ra-wrn-70-16.spec"),
}




class TestWdRatio(unittest.TestCase):


    def setUp(self):
        self.mode = current_mode()


    def test_robustified_table(self):

        for filename, name, expected, _ in ROBUSTIFIED_ROWS:
            spec = fixture_spec(filename)
            self.assertEqual(spec.name, name)
            self.assertAlmostEqual(wd_ratio(spec), expected, delta=0.01, msg=name)


    def test_resnet50_baseline(self):

        self.assertAlmostEqual(wd_ratio(fixture_spec("resnet50.spec")), 32.0, places=9)


    def test_last_stage_ignored(self):

        spec = toy_spec(depths=(2, 4), widths=(8, 1000))
        self.assertEqual(wd_ratio(spec), 4.0)

        widened = toy_spec(depths=(2, 7), widths=(8, 3))
        self.assertEqual(wd_ratio(widened), 4.0)


    def test_single_stage_rejected(self):

        spec = toy_spec(depths=(2,), widths=(8,))

        with self.assertRaises(SpecError):
            wd_ratio(spec)


    def test_invalid_spec_rejected(self):

        spec = toy_spec(depths=(0, 1), widths=(8, 16))

        with self.assertRaises(SpecValidationError):
            wd_ratio(spec)


    def test_in_optimal_range(self):

        self.assertTrue(in_optimal_range(fixture_spec("ra-resnet50.spec")))
        self.assertFalse(in_optimal_range(fixture_spec("resnet50.spec")))
        self.assertTrue(in_optimal_range(fixture_spec("resnet50.spec"), WdRange(30.0, 40.0)))




class TestWdRange(unittest.TestCase):


    def test_default(self):

        wd_range = WdRange.default()

        self.assertEqual((wd_range.lo, wd_range.hi), (7.5, 13.5))
        self.assertTrue(wd_range.contains(7.5))
        self.assertTrue(wd_range.contains(13.5))
        self.assertFalse(wd_range.contains(13.51))


    def test_inverted_range(self):

        with self.assertRaises(RangeError):
            WdRange(13.5, 7.5)


    def test_nan_range(self):

        with self.assertRaises(RangeError):
            WdRange(math.nan, 1.0)




class TestCountParams(unittest.TestCase):


    def setUp(self):
        self.mode = current_mode()


    def test_resnet_baselines_exact(self):

        self.assertEqual(count_params(fixture_spec("resnet50.spec")), 25557032)
        self.assertEqual(count_params(fixture_spec("resnet101.spec")), 44549160)
        self.assertEqual(count_params(fixture_spec("wrn-101-2.spec")), 126886696)


    def test_resnet50_within_two_percent(self):

        self.assertAlmostEqual(count_params(fixture_spec("resnet50.spec")), 25.7e6, delta=0.02 * 25.7e6)


    def test_wrn_28_10_within_two_percent(self):

        self.assertAlmostEqual(count_params(fixture_spec("wrn-28-10.spec")), 36.5e6, delta=0.02 * 36.5e6)


    def test_robustified_table(self):

        for filename, name, _, expected in ROBUSTIFIED_ROWS:
            params = count_params(fixture_spec(filename))
            self.assertAlmostEqual(params, expected, delta=0.02 * expected, msg=name)


    def test_hand_enumerated_minimal(self):

        # stem 3x3x3x1 + BN, two 3x3x1x1 + BN, linear 1 -> 1
        spec = toy_spec(stem=StemSpec(StemKind.CIFAR, 1), depths=(1,), widths=(1,), classes=1)

        self.assertEqual(count_params(spec), (27 + 2) + 2 * (9 + 2) + (1 + 1))


    def test_bias_replaces_norm(self):

        block = dataclasses.replace(BlockSpec.basic(), norm_mask=(False, True))
        spec = toy_spec(stem=StemSpec(StemKind.CIFAR, 1), depths=(1,), widths=(1,), classes=1, block=block)

        # conv1 keeps one bias instead of two affine terms
        self.assertEqual(count_params(spec), 53 - 1)


    def test_activation_parameters(self):

        base = toy_spec()
        relu = count_params(base)

        prelu = dataclasses.replace(base, activation=ActivationKind.PRELU)
        pssilu = dataclasses.replace(base, activation=ActivationKind.PSSILU)

        # stem + two blocks with two activations each
        self.assertEqual(count_params(prelu) - relu, 5)
        self.assertEqual(count_params(pssilu) - relu, 10)


    def test_se_parameters(self):

        base = toy_spec(widths=(8, 16))
        with_se = dataclasses.replace(base, block=BlockSpec.basic(se_ratio=4))

        # hidden = ceil(C / 4); two FC layers with biases per block
        expected = (2 * 8 * 2 + 2 + 8) + (2 * 16 * 4 + 4 + 16)
        self.assertEqual(count_params(with_se) - count_params(base), expected)


    def test_input_channels(self):

        spec = toy_spec()

        self.assertEqual(count_params(spec, 1) - count_params(spec, 3), -2 * 9 * 4)


    def test_roadmap_progression(self):

        steps = roadmap(fixture_spec("resnet50.spec"))
        expected = [25.7e6, 25.8e6, 25.9e6, 26.2e6, 26.2e6]
        tolerance = [0.02, 0.03, 0.02, 0.02, 0.02]

        self.assertEqual([label for label, _ in steps],
                         ["baseline", "DepthWidth", "ConvStem", "SqueezeExcite", "SmoothAct"])

        for (label, spec), value, slack in zip(steps, expected, tolerance):
            self.assertAlmostEqual(count_params(spec), value, delta=slack * value, msg=label)




class TestValidate(unittest.TestCase):


    def test_registry_specs_valid(self):

        for name in registry_names():
            self.assertEqual(validate(lookup(name)), [], msg=name)


    def test_fixtures_match_registry(self):

        for name, (baseline, robust) in BASELINE_FIXTURES.items():
            self.assertEqual(fixture_spec(baseline), lookup(name))
            self.assertEqual(fixture_spec(robust), lookup("Ra" + name))


    def test_zero_depth(self):

        violations = validate(toy_spec(depths=(1, 0)))

        self.assertEqual([v.field for v in violations], ["stages[1].depth"])


    def test_single_stage(self):

        violations = validate(toy_spec(depths=(1,), widths=(4,)))

        self.assertEqual([str(v) for v in violations], ["stages: len(stages) >= 2"])


    def test_basic_expansion(self):

        block = dataclasses.replace(BlockSpec.basic(), expansion=4)
        violations = validate(toy_spec(block=block))

        self.assertIn("block.expansion", [v.field for v in violations])


    def test_mask_length(self):

        block = dataclasses.replace(BlockSpec.bottleneck(), act_mask=(True, True))
        violations = validate(toy_spec(block=block))

        self.assertEqual([v.field for v in violations], ["block.act_mask"])


    def test_patchify_stride_above_patch(self):

        violations = validate(toy_spec(stem=StemSpec.patchify(2, 3, 8)))

        self.assertEqual([v.field for v in violations], ["stem.stride"])


    def test_all_violations_reported(self):

        spec = dataclasses.replace(toy_spec(depths=(0, 1), widths=(4, 0)), num_classes=0, name="")
        fields = [v.field for v in validate(spec)]

        self.assertEqual(fields, ["name", "stages[0].depth", "stages[1].width", "head.num_classes"])


    def test_ensure_valid_structural(self):

        single = toy_spec(depths=(1,), widths=(4,))

        ensure_valid(single, structural=True)
        with self.assertRaises(SpecValidationError):
            ensure_valid(single)


    def test_downsampling_factor(self):

        self.assertEqual(downsampling_factor(fixture_spec("resnet50.spec")), 32)
        self.assertEqual(downsampling_factor(fixture_spec("ra-resnet50.spec")), 32)
        self.assertEqual(downsampling_factor(fixture_spec("wrn-28-10.spec")), 4)

        ra = fixture_spec("ra-resnet50.spec")
        for patch, stride in ((4, 4), (2, 2), (4, 3), (4, 2), (4, 1)):
            patchified = dataclasses.replace(ra, stem=StemSpec.patchify(patch, stride, 96))
            self.assertEqual(downsampling_factor(patchified), 32, msg=(patch, stride))

        self.assertEqual(downsampling_factor(dataclasses.replace(ra, stem=StemSpec.patchify(8, 8, 96))), 64)




class TestRobustify(unittest.TestCase):


    def setUp(self):
        self.mode = current_mode()


    def test_all_matches_fixture(self):

        for name, (baseline, robust) in BASELINE_FIXTURES.items():
            result = robustify_all(fixture_spec(baseline))
            self.assertEqual(emit_spec(result), fixture_text(robust), msg=name)


    def test_all_is_idempotent(self):

        spec = fixture_spec("ra-resnet50.spec")

        self.assertEqual(robustify_all(spec), spec)


    def test_conv_stem_keeps_stages(self):

        spec = fixture_spec("resnet50.spec")

        stem_first = robustify_step(spec, RobustifyPrinciple.CONV_STEM)
        self.assertEqual(stem_first.stem, StemSpec(StemKind.POSTPONED, 96))
        self.assertEqual(stem_first.stages, spec.stages)


    def test_conv_stem_keeps_cifar_resolution(self):

        spec = robustify_step(fixture_spec("wrn-28-10.spec"), RobustifyPrinciple.CONV_STEM)

        self.assertEqual(spec.stem, StemSpec(StemKind.CIFAR, 96))


    def test_squeeze_excite(self):

        spec = robustify_step(fixture_spec("resnet50.spec"), RobustifyPrinciple.SQUEEZE_EXCITE)

        self.assertEqual(spec.block.se_ratio, 4)


    def test_smooth_act(self):

        spec = robustify_step(fixture_spec("resnet50.spec"), RobustifyPrinciple.SMOOTH_ACT)

        self.assertEqual(spec.activation, ActivationKind.SILU)


    def test_depth_width_unknown_name(self):

        spec = dataclasses.replace(fixture_spec("resnet50.spec"), name="MyNet")

        with self.assertRaises(NeedsExplicitStages):
            robustify_step(spec, RobustifyPrinciple.DEPTH_WIDTH)


    def test_depth_width_explicit_stages(self):

        spec = dataclasses.replace(fixture_spec("resnet50.spec"), name="MyNet")
        result = robustify_step(spec, RobustifyPrinciple.DEPTH_WIDTH, [(4, 40), (6, 60), (8, 80), (1, 100)])

        self.assertEqual(result.depths, [4, 6, 8, 1])
        self.assertEqual(result.widths, [40, 60, 80, 100])
        self.assertEqual(result.name, "MyNet")


    def test_depth_width_stages_outside_range(self):

        spec = fixture_spec("resnet50.spec")

        with self.assertRaises(SpecError):
            robustify_step(spec, RobustifyPrinciple.DEPTH_WIDTH, [(1, 64), (1, 128), (1, 256), (1, 512)])


    def test_invalid_input_spec(self):

        spec = toy_spec(depths=(1,), widths=(4,))

        with self.assertRaises(SpecValidationError):
            robustify_step(spec, RobustifyPrinciple.SMOOTH_ACT)




class TestVariants(unittest.TestCase):


    def test_component_variants_bottleneck(self):

        spec = fixture_spec("ra-resnet50.spec")
        variants = dict(component_variants(spec))

        self.assertEqual(len(variants), 23)
        self.assertEqual(variants["patch4-stride1"].stem, StemSpec.patchify(4, 1, 96))
        self.assertEqual(variants["SiLU-SiLU-0"].block.act_mask, (True, True, False))
        self.assertEqual(variants["0-0-SiLU"].block.act_mask, (False, False, True))
        self.assertEqual(variants["norm-0-1-1"].block.norm_mask, (False, True, True))
        self.assertEqual(variants["GELU"].activation, ActivationKind.GELU)
        self.assertNotIn("SiLU", variants)


    def test_component_variants_are_valid_and_named(self):

        spec = fixture_spec("wrn-28-10.spec")
        variants = component_variants(spec)
        names = [v.name for _, v in variants]

        self.assertEqual(len(names), len(set(names)))
        for label, variant in variants:
            self.assertEqual(validate(variant), [], msg=label)
            self.assertTrue(variant.name.startswith("WRN-28-10-"))


    def test_se_ratio_sweep(self):

        sweep = se_ratio_sweep(fixture_spec("ra-resnet50.spec"))

        self.assertEqual([s.block.se_ratio for s in sweep], [2, 4, 8, 16, 32, 64])
        self.assertEqual(sweep[0].name, "RaResNet-50-se2")

        # Fewer SE parameters as the ratio grows
        params = [count_params(s) for s in sweep]
        self.assertEqual(params, sorted(params, reverse=True))




if __name__ == '__main__':
    unittest.main()
