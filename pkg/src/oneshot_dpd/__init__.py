"""Robust restricted minimum DPD inference for step-stress one-shot device tests."""
