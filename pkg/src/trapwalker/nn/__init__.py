from .tensor import Tensor, concat, cross_entropy, elu, mse, relu, softmax
from .layers import LSTM, MLP, Linear, LSTMCell, Module
from .networks import (
    ACTION_DIM, ACTOR_IN, AMP_PAIR_DIM, BELIEF_DIM, CONTACT_LATENT_DIM,
    CRITIC_IN, ESTIMATOR_IN, NUM_CLASSES, NetworkConfig, PolicyBundle,
    discriminator_input_gradients, gaussian_entropy_graph, gaussian_kl_np,
    gaussian_log_prob_graph, gaussian_log_prob_np,
)
from .optim import Adam, adam_step, clip_grad_norm
from .checkpoint import (
    bundle_param_arrays, load_bundle_params, load_checkpoint, restore_rng,
    rng_state, save_checkpoint,
)
