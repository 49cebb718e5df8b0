"""Multi-resolution mesh-network encoding and clustering of region time-series.

The pipeline: decompose each region's signal into wavelet sub-bands,
estimate a ridge-regression mesh network per time window and sub-band,
compress the flattened arc weights with a stacked denoising autoencoder,
and cluster the per-window codes to recover task structure.
"""

from meshwave.session import (
    ScanSession,
    RegionTimeSeries,
    TaskSpan,
    Window,
    average_region_signals,
    partition_windows,
    window_labels,
    window_majority_label,
)
from meshwave.wavelet import (
    WaveletCoefficients,
    SubbandStack,
    dwt_decompose,
    inverse_dwt,
    reconstruct_subband,
    decompose_all_subbands,
    max_decomposition_levels,
    subband_name,
)
from meshwave.mesh import (
    MeshConfig,
    MeshNetwork,
    EmbeddingMatrix,
    nearest_neighbors,
    fit_local_mesh,
    build_mesh_network,
    build_embedding_matrix,
    unflatten_weights,
)
from meshwave.encoder import (
    SdaeConfig,
    SdaeParams,
    FeatureMatrix,
    TrainResult,
    forward,
    corrupt,
    loss,
    loss_terms,
    grad,
    train,
    encode_features,
    concat_features,
    save_params,
    load_params,
)
from meshwave.clustering import (
    DistanceMatrix,
    ClusterAssignment,
    correlation_distance,
    hierarchical_cluster,
    cluster_cost,
    cluster_medoid,
)
from meshwave.metrics import (
    PairCounts,
    pair_counts,
    rand_index,
    adjusted_rand_index,
)
from meshwave.netstats import (
    PrecisionNetwork,
    edge_precision,
    prune_to_sparsity,
    export_edge_list,
    read_edge_list,
    export_precision,
)
from meshwave.datagen import (
    SynthSpec,
    make_synth_spec,
    generate_session,
)

__version__ = "0.1.0"
