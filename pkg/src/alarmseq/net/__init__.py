from .io import dumps_model, load_model, loads_model, save_model
from .layers import (attention_forward, bilstm_forward, conv1d_forward, head_forward, lstm_forward,
                     sigmoid, softmax)
from .model import (LAYER_GROUPS, TENSOR_NAMES, ModelParams, NetConfig, forward, glorot_limit, gradcheck,
                    init_params, layer_report, loss_and_backward, loss_only, predict, predict_proba,
                    tensor_shapes, tiny_config)
from .optim import AdamState, adam_step
