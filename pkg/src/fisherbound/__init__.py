"""Fisher information of channel-processed samples and its
mutual-information upper bound, with the tools needed to check it:
statistical models, channels, information measures, Fisher computations,
bound verifiers and a small distributed-estimation simulator."""

__version__ = "0.1.0"

from .errors import (
    CapabilityError,
    ConvergenceError,
    DivergenceInfiniteError,
    DomainError,
    FisherBoundError,
    LikelihoodRatioError,
    ParameterError,
    ProtocolError,
    ShapeError,
    UnsupportedOperationError,
    ValidationError,
)
from .models import (
    BernoulliModel,
    DiscreteModel,
    GaussianLocation,
    ProductModel,
    StatModel,
    SubGaussianCertificate,
    TwistFamily,
    certify_subgaussian,
    model_from_dict,
)
from .channels import (
    AwgnChannel,
    BinaryErasureChannel,
    BinarySymmetricChannel,
    Channel,
    DiscreteChannel,
    FunctionChannel,
    QuantizerChannel,
    RandomizedResponseChannel,
    channel_from_dict,
    identity_channel,
)
from .info import (
    CapacityResult,
    DivergenceValue,
    MIEstimate,
    capacity_blahut_arimoto,
    entropy,
    js_divergence,
    kl_divergence,
    mi_gaussian_awgn,
    mi_monte_carlo,
    mutual_information,
)
from .fisher import (
    FisherMatrix,
    fisher_fd_check,
    fisher_input,
    fisher_output,
    fisher_output_exact,
    fisher_trace_decomposition,
)
from .bounds import (
    BoundReport,
    PathSpec,
    regularity_iv_taylor_check,
    thm1_grid_sweep,
    thm1_verify,
    thm2_js_bound,
    van_trees_lower_bound,
)
from .distributed import (
    ProtocolConfig,
    Transcript,
    averaging_estimator,
    awgn_tightness_experiment,
    empirical_mse,
    run_protocol,
    simulate_awgn_averaging,
    sup_total_mi,
)
