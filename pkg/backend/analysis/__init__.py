"""Instance generators, convergence tracing, benchmarks and optimizer comparison"""
