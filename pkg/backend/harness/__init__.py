"""Synthetic training tasks, gradient checks and the training loop"""
