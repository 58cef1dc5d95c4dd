// placeholder until benchmarks land
