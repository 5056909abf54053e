# %% [markdown]
# # The network, layer by layer
#
# Build the embedding + 1-D convolution classifier and print its per-sample
# output shapes and parameter counts. With a vocabulary of 152 codes the
# total comes to 132,513 trainable parameters; on the bundled Cleveland data
# the vocabulary is derived from the training split instead.

# %%
from hdcnn import ingest, nn

net = nn.build_cnn(vocab_size=152)
for name, shape, count in net.summary():
    print(f"{name:<15} {str(shape):<12} {count:>7}")
print("total", net.n_params)

# %% [markdown]
# The same stack with the data-derived vocabulary (8 categorical attributes
# with their distinct codes plus 10 quantile bins for each of the 5
# continuous ones).

# %%
ds = ingest.load_dataset(seed=0)
print("vocabulary", ds.vocab_size, "->", nn.build_cnn(ds.vocab_size).n_params, "parameters")

# %% [markdown]
# Output length of a convolution follows (w + 2p - f) / s + 1; "same"
# padding for a width-3 filter is p = 1.

# %%
print(nn.conv_out_len(13, 3, 1, 1), nn.conv_out_len(13, 3, 0, 1))
