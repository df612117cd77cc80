"""Parameters, special functions, quadrature and shared result types."""
