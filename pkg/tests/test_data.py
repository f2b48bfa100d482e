#!/usr/bin/env python3
# SPDX-License-Identifier: BSD-3-Clause
# Copyright(C) 2026 robarch contributors
# Authors:
#   robarch contributors

import os
import tempfile
import unittest
import unittest.mock

import numpy as np

from robarch import *

from .common import *




class TestDataset(unittest.TestCase):


    def setUp(self):
        self.mode = current_mode()


    def test_validation(self):

        with self.assertRaises(FormatError):
            Dataset(np.zeros((2, 3, 4)), np.zeros(2), 2, "x")

        with self.assertRaises(FormatError):
            Dataset(np.zeros((2, 1, 4, 4)), np.zeros(3), 2, "x")

        with self.assertRaises(FormatError):
            Dataset(np.zeros((2, 1, 4, 4)), np.array([0, 2]), 2, "x")

        with self.assertRaises(FormatError):
            Dataset(np.full((2, 1, 4, 4), 1.5), np.array([0, 1]), 2, "x")


    def test_batches(self):

        dataset = gen_synthetic(0, 10, 4, 2)

        sizes = [len(labels) for _, labels in dataset.batches(4)]
        self.assertEqual(sizes, [4, 4, 2])

        shuffled = np.concatenate([labels for _, labels in dataset.batches(4, np.random.default_rng(0))])
        self.assertEqual(sorted(shuffled), sorted(dataset.labels))


    def test_subset(self):

        dataset = gen_synthetic(0, 10, 4, 2)

        self.assertEqual(len(dataset.subset(3)), 3)
        np.testing.assert_array_equal(dataset.subset(3).images, dataset.images[:3])




class TestSynthetic(unittest.TestCase):


    def setUp(self):
        self.mode = current_mode()


    def test_shape_and_balance(self):

        dataset = gen_synthetic(1, 2000, 16, 2)

        self.assertEqual(dataset.images.shape, (2000, 3, 16, 16))
        self.assertEqual(np.bincount(dataset.labels).tolist(), [1000, 1000])
        self.assertGreaterEqual(dataset.images.min(), 0.0)
        self.assertLessEqual(dataset.images.max(), 1.0)


    def test_seeded(self):

        self.assertEqual(gen_synthetic(3, 50, 8, 3).digest(), gen_synthetic(3, 50, 8, 3).digest())
        self.assertNotEqual(gen_synthetic(3, 50, 8, 3).digest(), gen_synthetic(4, 50, 8, 3).digest())


    def test_brightness_cue_below_budget(self):

        means = class_means(16, 2)
        brightness = means.mean(axis=(1, 2, 3))

        # Mean brightness differs by less than a 0.05 shift can undo
        self.assertLess(abs(brightness[1] - brightness[0]), 2 * 0.05)
        self.assertGreater(np.abs(means[1] - means[0]).max(), 2 * 0.05)


    def test_conflicting_gratings(self):

        dataset = gen_synthetic(2, 2000, 16, 2, noise=0.0, conflict=0.25)
        means = class_means(16, 2)
        offsets = class_offsets(2)

        own = np.all(np.isclose(dataset.images, means[dataset.labels]), axis=(1, 2, 3))
        self.assertLess(abs(1.0 - own.mean() - 0.25), 0.05)

        # Brightness still follows the label on every sample
        brightness = dataset.images.mean(axis=(1, 2, 3)) - 0.5
        np.testing.assert_allclose(brightness, offsets[dataset.labels], atol=1e-12)

        self.assertEqual(gen_synthetic(2, 50, 8, 2).digest(), gen_synthetic(2, 50, 8, 2, conflict=0.0).digest())

        for conflict in (-0.1, 1.5):
            with self.assertRaises(ConfigError):
                gen_synthetic(0, 10, 8, 2, conflict=conflict)
        with self.assertRaises(ConfigError):
            gen_synthetic(0, 10, 8, 1, conflict=0.5)


    def test_invalid(self):

        for args in [(0, 1, 8, 2), (0, 10, 0, 2), (0, 10, 8, 0)]:
            with self.assertRaises(ConfigError, msg=str(args)):
                gen_synthetic(*args)

        with self.assertRaises(ConfigError):
            gen_synthetic(0, 10, 8, 2, noise=-1.0)




class TestFiles(unittest.TestCase):


    def setUp(self):
        self.mode = current_mode()


    def test_cifar10_layout(self):

        dataset = gen_synthetic(2, 12, 32, 10)

        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "data_batch_1.bin")
            write_cifar10_bin(dataset, path)

            self.assertEqual(os.path.getsize(path), 12 * 3073)
            with open(path, "rb") as f:
                first = f.read(3073)
            self.assertEqual(first[0], dataset.labels[0])
            self.assertEqual(first[1], int(np.rint(dataset.images[0, 0, 0, 0] * 255)))

            loaded = load_cifar10_bin(path)
            np.testing.assert_array_equal(loaded.labels, dataset.labels)
            np.testing.assert_allclose(loaded.images, dataset.images, atol=0.5 / 255 + 1e-12)

            self.assertEqual(len(load_cifar10_bin(path, limit=5)), 5)
            self.assertEqual(len(load_dataset_any(path, limit=5)), 5)


    def test_cifar10_bad_size(self):

        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "broken.bin")
            with open(path, "wb") as f:
                f.write(b"\x00" * 3074)

            with self.assertRaises(FormatError):
                load_cifar10_bin(path)


    def test_cifar10_bad_label(self):

        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "broken.bin")
            with open(path, "wb") as f:
                f.write(b"\x0c" + b"\x00" * 3072)

            with self.assertRaises(FormatError):
                load_cifar10_bin(path)


    def test_cifar10_limit_reads_prefix(self):

        dataset = gen_synthetic(3, 6, 32, 10)

        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "data_batch_1.bin")
            write_cifar10_bin(dataset, path)

            with unittest.mock.patch.object(np, "frombuffer", wraps=np.frombuffer) as frombuffer:
                loaded = load_cifar10_bin(path, limit=2)

            self.assertEqual(len(frombuffer.call_args[0][0]), 2 * 3073)
            np.testing.assert_array_equal(loaded.labels, dataset.labels[:2])
            self.assertEqual(len(load_cifar10_bin(path, limit=0)), 0)
            self.assertEqual(len(load_cifar10_bin(path, limit=100)), 6)

            with self.assertRaises(ConfigError):
                load_cifar10_bin(path, limit=-1)


    def test_inputs_must_be_regular_files(self):

        with tempfile.TemporaryDirectory() as tmp:
            spec = os.path.join(tmp, "toy.spec")
            save_spec(fixture_spec("toy-cifar.spec"), spec)
            data = os.path.join(tmp, "data.bin")
            save_dataset(gen_synthetic(0, 4, 8, 2), data)
            weights = os.path.join(tmp, "weights.bin")
            net = build_network(fixture_spec("toy-cifar.spec"), (3, 8, 8), 0)
            net.save_weights(weights)

            rejected = [tmp, os.path.join(tmp, "missing")]
            for target in [spec, data, weights]:
                os.symlink(target, target + ".link")
                rejected.append(target + ".link")

            for path in rejected:
                for load in [load_spec, load_dataset_any, load_cifar10_bin, net.load_weights]:
                    with self.assertRaises(FormatError, msg=(path, load)):
                        load(path)


    def test_cifar10_wrong_geometry(self):

        with tempfile.TemporaryDirectory() as tmp:
            with self.assertRaises(FormatError):
                write_cifar10_bin(gen_synthetic(0, 4, 16, 2), os.path.join(tmp, "x.bin"))


    def test_snapshot(self):

        dataset = gen_synthetic(5, 20, 8, 3)

        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "data.bin")
            save_dataset(dataset, path)

            loaded = load_dataset_any(path)
            self.assertEqual(loaded.digest(), dataset.digest())
            self.assertEqual(len(load_dataset_any(path, limit=4)), 4)


    def test_weights_are_not_a_dataset(self):

        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "weights.bin")
            save_tensors(path, {"a": np.zeros(1)})

            with self.assertRaises(FormatError):
                load_dataset(path)




if __name__ == '__main__':
    unittest.main()
