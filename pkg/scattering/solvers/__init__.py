"""Phase-shift methods: unitary perturbation theory, Green iteration and oracles."""
