"""Non-linear coordination graphs: piece-wise greedy action selection for LeakyReLU mixing."""
