"""Stability certificates for digital control loops with uncertain sensor and actuator timing."""
