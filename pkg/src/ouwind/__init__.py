"""Winding and radial processes of complex Ornstein-Uhlenbeck processes."""
