#!/usr/bin/env python3
# SPDX-License-Identifier: Apache-2.0
# Reference child for the external denoiser protocol: returns the injected
# noise, plus an optional constant given as argv[1].
import io
import json
import sys

import numpy as np


def read_tensor(stream):
    np.lib.format.read_magic(stream)
    shape, fortran, dtype = np.lib.format.read_array_header_1_0(stream)
    count = int(np.prod(shape)) * dtype.itemsize
    data = stream.read(count)
    if len(data) != count:
        raise EOFError("truncated tensor")
    order = "F" if fortran else "C"
    return np.frombuffer(data, dtype=dtype).reshape(shape, order=order)


def main():
    bias = float(sys.argv[1]) if len(sys.argv) > 1 else 0.0
    stdin = sys.stdin.buffer
    stdout = sys.stdout.buffer
    while True:
        line = stdin.readline()
        if not line:
            return
        header = json.loads(line)
        tensors = {name: read_tensor(stdin) for name in header["tensors"]}
        for name in ("noise_rgb", "noise_depth"):
            buf = io.BytesIO()
            np.lib.format.write_array(buf, tensors[name] + bias, version=(1, 0))
            stdout.write(buf.getvalue())
        stdout.flush()


if __name__ == "__main__":
    main()
