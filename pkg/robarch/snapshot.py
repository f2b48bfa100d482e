#!/usr/bin/env python3
# SPDX-License-Identifier: BSD-3-Clause
# Copyright(C) 2026 robarch contributors
# Authors:
#   robarch contributors

""" Module snapshot

Binary container for named float64 tensors, used for network weights and
for datasets.

   * save_tensors / load_tensors
   * encode_tensors / decode_tensors

A snapshot file is the 8-byte magic header b"RBARCHW1" followed by one
protobuf message with this schema:

    syntax = "proto3";
    package robarch;

    message NamedTensor {
        string name = 1;
        repeated uint64 shape = 2;
        bytes payload = 3;      // little-endian float64, row-major
    }

    message Snapshot {
        string kind = 1;        // "weights" or "dataset"
        repeated NamedTensor tensors = 2;
    }

The message classes are built at import time from the descriptor above, so
no generated code has to be shipped.
"""




import numpy as np

from google.protobuf import descriptor_pb2
from google.protobuf import descriptor_pool
from google.protobuf import message as protobuf_message
from google.protobuf import message_factory

from .common import FormatError
from .common import ensure_input_file

from .logger import get_logger


logger = get_logger(__name__)


MAGIC = b"RBARCHW1"




def _message_classes():

    FieldProto = descriptor_pb2.FieldDescriptorProto

    proto = descriptor_pb2.FileDescriptorProto()
    proto.name = "robarch/snapshot.proto"
    proto.package = "robarch"
    proto.syntax = "proto3"

    tensor = proto.message_type.add()
    tensor.name = "NamedTensor"
    for name, number, kind, label in (
            ("name", 1, FieldProto.TYPE_STRING, FieldProto.LABEL_OPTIONAL),
            ("shape", 2, FieldProto.TYPE_UINT64, FieldProto.LABEL_REPEATED),
            ("payload", 3, FieldProto.TYPE_BYTES, FieldProto.LABEL_OPTIONAL)):
        field = tensor.field.add()
        field.name = name
        field.number = number
        field.type = kind
        field.label = label

    snapshot = proto.message_type.add()
    snapshot.name = "Snapshot"
    field = snapshot.field.add()
    field.name = "kind"
    field.number = 1
    field.type = FieldProto.TYPE_STRING
    field.label = FieldProto.LABEL_OPTIONAL
    field = snapshot.field.add()
    field.name = "tensors"
    field.number = 2
    field.type = FieldProto.TYPE_MESSAGE
    field.label = FieldProto.LABEL_REPEATED
    field.type_name = ".robarch.NamedTensor"

    pool = descriptor_pool.DescriptorPool()
    pool.AddSerializedFile(proto.SerializeToString())
    descriptor = pool.FindMessageTypeByName("robarch.Snapshot")

    if hasattr(message_factory, "GetMessageClass"):
        return message_factory.GetMessageClass(descriptor)

    return message_factory.MessageFactory(pool).GetPrototype(descriptor)


Snapshot = _message_classes()




def encode_tensors(tensors, kind="weights"):
    """tensors: mapping name -> array. Order is preserved."""

    message = Snapshot()
    message.kind = kind

    for name, values in tensors.items():
        values = np.asarray(values, dtype="<f8")
        entry = message.tensors.add()
        entry.name = name
        entry.shape.extend(int(n) for n in values.shape)
        entry.payload = np.ascontiguousarray(values).tobytes()

    return MAGIC + message.SerializeToString()


def decode_tensors(data):
    """Inverse of encode_tensors: returns (kind, dict name -> array)."""

    if not data.startswith(MAGIC):
        raise FormatError("Not a snapshot: bad magic header")

    message = Snapshot()
    try:
        message.ParseFromString(data[len(MAGIC):])
    except protobuf_message.DecodeError as ex:
        raise FormatError(f"Corrupted snapshot: {ex}")

    tensors = {}
    for entry in message.tensors:
        shape = tuple(int(n) for n in entry.shape)
        expected = 8 * int(np.prod(shape, dtype=np.int64))
        if len(entry.payload) != expected:
            raise FormatError(f"Tensor {entry.name}: payload has {len(entry.payload)} bytes, shape needs {expected}")
        if entry.name in tensors:
            raise FormatError(f"Duplicate tensor {entry.name}")
        tensors[entry.name] = np.frombuffer(entry.payload, dtype="<f8").astype(np.float64).reshape(shape)

    return message.kind, tensors


def is_snapshot(path):
    with open(path, "rb") as f:
        return f.read(len(MAGIC)) == MAGIC


def save_tensors(path, tensors, kind="weights"):

    data = encode_tensors(tensors, kind)
    with open(path, "wb") as f:
        f.write(data)

    logger.info(f"Saved {len(tensors)} tensors to {path}")


def load_tensors(path):

    ensure_input_file(path)
    with open(path, "rb") as f:
        data = f.read()

    return decode_tensors(data)
