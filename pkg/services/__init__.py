"""Output and validation services: table writers and the invariant checks."""
