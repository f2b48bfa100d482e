#!/usr/bin/env python3
# SPDX-License-Identifier: BSD-3-Clause
# Copyright(C) 2026 robarch contributors
# Authors:
#   robarch contributors

import math
import unittest

import numpy as np

from robarch import *

from .common import *




class TestSampling(unittest.TestCase):


    def setUp(self):
        self.mode = current_mode()
        self.template = fixture_spec("ra-resnet50.spec")


    def test_population_within_bounds(self):

        count = 1000 if self.mode == TestMode.FULL else 200
        bounds = SampleBounds.default()

        samples = sample_population(0, count, bounds, self.template)

        self.assertEqual(len(samples), count)
        for s in samples:
            self.assertIn(s.n, bounds.n_choices)
            self.assertTrue(all(1 <= d <= bounds.max_depth for d in s.depths))
            self.assertTrue(all(1 <= w <= bounds.max_width for w in s.widths))
            self.assertEqual(validate(s.spec), [])
            self.assertEqual(s.params, count_params(s.spec))
            self.assertEqual(s.wd, wd_ratio(s.spec))


    def test_sample_keeps_template(self):

        s = sample_config(42, SampleBounds.default(), self.template)

        self.assertEqual(s.spec.stem, self.template.stem)
        self.assertEqual(s.spec.block, self.template.block)
        self.assertEqual(s.spec.activation, self.template.activation)
        self.assertEqual(s.name, "RaResNet-50-s42")


    def test_seeded(self):

        bounds = SampleBounds.default()

        self.assertEqual(sample_config(7, bounds, self.template), sample_config(7, bounds, self.template))
        self.assertNotEqual(sample_config(7, bounds, self.template).depths,
                            sample_config(8, bounds, self.template).depths)


    def test_param_budget(self):

        bounds = SampleBounds((3, 4), 8, 64, (10000, 2000000))
        template = fixture_spec("toy-cifar.spec")

        for s in sample_population(3, 20, bounds, template):
            self.assertTrue(10000 <= s.params <= 2000000)


    def test_budget_infeasible(self):

        bounds = SampleBounds((3,), 2, 2, (10 ** 12, 10 ** 13))

        with self.assertRaises(BudgetInfeasible):
            sample_config(0, bounds, fixture_spec("toy-cifar.spec"))


    def test_invalid_bounds(self):

        for kwargs in [dict(n_choices=()), dict(n_choices=(0, 3)), dict(n_choices=(1, 3)), dict(max_depth=0),
                       dict(max_width=-1), dict(param_budget=(5, 1))]:
            with self.assertRaises(ConfigError, msg=str(kwargs)):
                SampleBounds(**kwargs)


    def test_error_range(self):

        with self.assertRaises(RangeError):
            DesignSample("x", (1, 1), (1, 1), 1.0, 10, error=1.5)




class TestStatistics(unittest.TestCase):


    def setUp(self):
        self.mode = current_mode()


    def test_edf_invariants(self):

        errors = np.random.default_rng(0).uniform(0, 1, 57)
        curve = compute_edf(errors)

        self.assertEqual(len(curve), 57)
        self.assertEqual(list(curve.xs), sorted(curve.xs))
        self.assertTrue(all(a < b for a, b in zip(curve.ys, curve.ys[1:])))
        self.assertTrue(all(0.0 < y <= 1.0 for y in curve.ys))
        self.assertEqual(curve.ys[-1], 1.0)


    def test_edf_ties(self):

        curve = compute_edf([0.3, 0.1, 0.3])

        self.assertEqual(curve.xs, (0.1, 0.3, 0.3))
        self.assertEqual(curve.at(0.3), 1.0)
        self.assertAlmostEqual(curve.at(0.2), 1.0 / 3.0)
        self.assertEqual(curve.at(0.0), 0.0)


    def test_edf_empty(self):

        curve = compute_edf([])

        self.assertEqual(len(curve), 0)
        self.assertEqual(curve.at(0.5), 0.0)


    def test_edf_out_of_range(self):

        with self.assertRaises(RangeError):
            compute_edf([0.2, 1.2])


    def test_pearson_hand_value(self):

        xs = [1.0, 2.0, 3.0, 4.0, 5.0]
        ys = [2.0, 4.0, 5.0, 4.0, 5.0]

        mx, my = sum(xs) / 5, sum(ys) / 5
        cov = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
        sx = math.sqrt(sum((x - mx) ** 2 for x in xs))
        sy = math.sqrt(sum((y - my) ** 2 for y in ys))

        self.assertAlmostEqual(pearson(xs, ys), cov / (sx * sy), places=12)


    def test_pearson_sign(self):

        rng = np.random.default_rng(1)
        wd = rng.uniform(2, 40, 500)
        error = 0.01 * wd + rng.normal(0, 0.02, 500)

        self.assertGreater(pearson(wd, error), 0.8)
        self.assertLess(pearson(wd, -error), -0.8)


    def test_pearson_degenerate(self):

        for xs, ys in [([1.0], [2.0]), ([1.0, 1.0, 1.0], [1.0, 2.0, 3.0]), ([1.0, 2.0], [1.0, 2.0, 3.0])]:
            with self.assertRaises(DegenerateInput):
                pearson(xs, ys)


    def test_pearson_extreme_magnitudes(self):

        self.assertAlmostEqual(pearson([1e200, -1e200, 0.0], [-1e200, 1e200, 0.0]), -1.0, places=12)
        self.assertAlmostEqual(pearson([1e308, -1e308, 1e307], [2.0, -2.0, 0.2]), 1.0, places=12)
        self.assertAlmostEqual(pearson([1e-300, 2e-300, 3e-300], [3.0, 2.0, 1.0]), -1.0, places=12)


    def test_pearson_non_finite(self):

        for xs, ys in [([math.nan, 1.0, 2.0], [1.0, 2.0, 3.0]), ([1.0, 2.0, 3.0], [1.0, math.inf, 3.0])]:
            with self.assertRaises(DegenerateInput):
                pearson(xs, ys)


    def test_partition(self):

        samples = [DesignSample(f"s{i}", (1, 1), (1, 1), wd, 10) for i, wd in enumerate([5.0, 7.5, 10.0, 13.5, 20.0])]

        inside, outside = partition_by_range(samples, WdRange.default())

        self.assertEqual([s.wd for s in inside], [7.5, 10.0, 13.5])
        self.assertEqual([s.wd for s in outside], [5.0, 20.0])


    def test_top_fraction_range(self):

        wds = [4.0, 8.0, 9.0, 10.0, 12.0, 30.0, 35.0, 40.0, 45.0, 50.0]
        errors = [0.5, 0.1, 0.12, 0.11, 0.2, 0.6, 0.7, 0.8, 0.9, 0.95]
        samples = [DesignSample(f"s{i}", (1, 1), (1, 1), wd, 10, e) for i, (wd, e) in enumerate(zip(wds, errors))]

        best = top_fraction_range(samples, fraction=0.3)
        self.assertEqual((best.lo, best.hi), (8.0, 10.0))

        # A second metric favouring other samples narrows the intersection
        other = [0.5, 0.3, 0.1, 0.2, 0.05, 0.9, 0.9, 0.9, 0.9, 0.9]
        narrowed = top_fraction_range(samples, metrics=[errors, other], fraction=0.3)
        self.assertEqual((narrowed.lo, narrowed.hi), (9.0, 10.0))

        disjoint = [0.9, 0.9, 0.9, 0.9, 0.9, 0.1, 0.1, 0.1, 0.9, 0.9]
        self.assertIsNone(top_fraction_range(samples, metrics=[errors, disjoint], fraction=0.3))




class TestTables(unittest.TestCase):


    def setUp(self):
        self.mode = current_mode()


    def test_sample_table_columns(self):

        bounds = SampleBounds((3, 4), 10, 50)
        samples = sample_population(5, 6, bounds, fixture_spec("toy-cifar.spec"))

        text = samples_to_csv(samples)
        header = text.splitlines()[0].split(",")
        k = max(s.n for s in samples)

        self.assertEqual(header[:2], ["name", "n"])
        self.assertEqual(header[-3:], ["wd", "params", "error"])
        self.assertEqual(len(header), 5 + 2 * k)


    def test_sample_table_survives_reading(self):

        bounds = SampleBounds((3, 4), 10, 50)
        samples = [s.with_error(0.1 * (i + 1)) for i, s in
                   enumerate(sample_population(5, 6, bounds, fixture_spec("toy-cifar.spec")))]

        restored = samples_from_csv(samples_to_csv(samples))

        for a, b in zip(samples, restored):
            self.assertEqual((a.name, a.depths, a.widths, a.params), (b.name, b.depths, b.widths, b.params))
            self.assertAlmostEqual(a.wd, b.wd, places=8)
            self.assertAlmostEqual(a.error, b.error, places=12)


    def test_sample_table_bad_input(self):

        with self.assertRaises(FormatError):
            samples_from_csv("name,n\nx,1\n")

        with self.assertRaises(FormatError):
            samples_from_csv("name,n,D1,W1,wd,params,error\nx,2,1,1,1.0,10,\n")


    def test_edf_table(self):

        text = edf_to_csv([("all", compute_edf([0.2, 0.4])), ("inside", compute_edf([0.2]))])

        self.assertEqual(text, "group,x,y\nall,0.2,0.5\nall,0.4,1\ninside,0.2,1\n")




if __name__ == '__main__':
    unittest.main()
