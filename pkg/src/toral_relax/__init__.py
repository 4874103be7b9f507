"""Relaxation times of noisy classical and quantized maps on the torus."""
