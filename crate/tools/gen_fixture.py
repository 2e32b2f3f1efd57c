#!/usr/bin/env python3
"""Regenerates the stock-exporter test fixture at
crates/core/tests/fixtures/tiny.onnx.

The network is deliberately small: Conv(2->4, 3x3, pad 1) + ReLU,
MaxPool(2x2, stride 2), Flatten, Gemm(64->10), Softmax, on a 2x8x8 input.
Weights are seeded so the file is reproducible.
"""

from pathlib import Path

import torch
import torch.nn as nn
import torch.onnx._internal.torchscript_exporter.onnx_proto_utils as _proto_utils

# The exporter's final pass only splices onnxscript custom functions into the
# proto and needs the `onnx` package for that. This model has no custom
# functions, so make the pass the identity; the serialized bytes are
# unchanged exporter output.
_proto_utils._add_onnxscript_fn = lambda model_bytes, custom_opsets: model_bytes


class Tiny(nn.Module):
    def __init__(self):
        super().__init__()
        self.conv = nn.Conv2d(2, 4, kernel_size=3, padding=1)
        self.relu = nn.ReLU()
        self.pool = nn.MaxPool2d(kernel_size=2, stride=2)
        self.fc = nn.Linear(64, 10)
        self.softmax = nn.Softmax(dim=1)

    def forward(self, x):
        x = self.pool(self.relu(self.conv(x)))
        x = torch.flatten(x, 1)
        return self.softmax(self.fc(x))


def main():
    torch.manual_seed(7)
    model = Tiny().eval()
    out = Path(__file__).resolve().parent.parent / "crates/core/tests/fixtures/tiny.onnx"
    out.parent.mkdir(parents=True, exist_ok=True)
    torch.onnx.export(
        model,
        torch.randn(1, 2, 8, 8),
        str(out),
        input_names=["input"],
        output_names=["probs"],
        opset_version=13,
        dynamo=False,
    )
    print(f"wrote {out} ({out.stat().st_size} bytes)")

    # Reference outputs for the float-path cross-check, printed as Rust
    # array literals to paste into the fixture test.
    torch.manual_seed(99)
    x = torch.randn(1, 2, 8, 8)
    with torch.no_grad():
        logits = model.fc(torch.flatten(model.pool(model.relu(model.conv(x))), 1))
    flat = ", ".join(f"{v:.6}f32" for v in x.flatten().tolist())
    logs = ", ".join(f"{v:.6}f32" for v in logits.flatten().tolist())
    print(f"const PROBE_INPUT: [f32; 128] = [{flat}];")
    print(f"const PROBE_LOGITS: [f32; 10] = [{logs}];")


if __name__ == "__main__":
    main()
