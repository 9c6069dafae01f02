"""
Block-based search space: tokens, encodings and network costs
==============================================================

Walks the core vocabulary of the toolkit. Architectures are strings of
per-block tokens, every block choosing an expansion ratio, a depthwise
kernel size, a layer count and whether to add squeeze-excitation. The
space object validates, samples, mutates, encodes and prices them.
"""

import numpy as np

from anbkit.archspace import (SpaceDef, encode, encoding_width, flops_params,
                              mutate, parse_arch, sample_uniform, space_size,
                              uniform_grid)

# ----------------------------------------------------------------------
# The default space: 7 blocks, 36 variants per block.
# ----------------------------------------------------------------------
space = SpaceDef()
print("choices per block:",
      {name: space.choices(name) for name in ("expansion", "kernel",
                                              "layers", "se")})
print("total architectures:", f"{space_size(space):,}")

# ----------------------------------------------------------------------
# Tokens are compact and reversible.
# ----------------------------------------------------------------------
rng = np.random.default_rng(0)
arch = sample_uniform(space, rng)
print("\nsampled:", arch)
assert parse_arch(str(arch), space) == arch

child = mutate(space, arch, rng)
print("mutated:", child)

# ----------------------------------------------------------------------
# One-hot encoding feeds the surrogate models: 9 features per block.
# ----------------------------------------------------------------------
vec = encode(space, arch)
print("\nencoding width:", encoding_width(space))
print("first block segment:", vec[:9])

# ----------------------------------------------------------------------
# The cost model prices a full network (stem, blocks, head, classifier)
# in multiply-accumulates and parameters.
# ----------------------------------------------------------------------
macs, params = flops_params(space, arch)
print(f"\n{arch}")
print(f"  {macs / 1e6:8.1f} M MACs   {params / 1e6:5.2f} M params at 224px")
macs_low, _ = flops_params(space, arch, input_res=160)
print(f"  {macs_low / 1e6:8.1f} M MACs at 160px")

# ----------------------------------------------------------------------
# For probe sets we want architectures spread evenly across the cost
# axis rather than plain random draws.
# ----------------------------------------------------------------------
grid = uniform_grid(space, 8, 200, np.random.default_rng(42))
print("\nflops-spread probe set:")
for a in grid:
    m, p = flops_params(space, a)
    print(f"  {m / 1e6:8.1f} M MACs   {str(a)}")
