"""Reference constants frozen before any Monte Carlo run.

Generated by ``tripartite oracle``; do not edit by hand.
"""

# 27-amplitude contraction, P(alice=m, bob=m) in the Fourier basis
FOURIER_DIAGONAL_PAIR = 0.22222222222222235

# 27-amplitude contraction, P(alice=m, bob=m') for m != m'
FOURIER_OFF_DIAGONAL_PAIR = 0.05555555555555558

# enumeration of three uniform choices over two bases
SECRET_SHARING_SIFT = 0.25

# reduced density matrix, fixed subspace {0,1}, no eavesdropper
QKD_SIFT_FIXED = 0.16666666666666666

# reduced density matrix, random subspace per party, no eavesdropper
QKD_SIFT_RANDOM = 0.05555555555555555

# reduced density matrix, fixed subspace {0,1}, no eavesdropper
QKD_QBER_HONEST = 0.0

# intercept-resend channel on Bob, uniform over the two {0,1} subspace bases
QKD_QBER_EVE = 0.25000000000000006

# intercept-resend channel on Bob, uniform over the two {0,1} subspace bases
QKD_SIFT_EVE = 0.16666666666666663

# intercept-resend channel on Bob, uniform over the full computational and Fourier bases
QKD_QBER_EVE_3D = 0.3571428571428571

# intercept-resend channel on Bob, uniform over the full computational and Fourier bases
QKD_SIFT_EVE_3D = 0.19444444444444453

# permanent of the OAM-filtered DFT coupler, summed over partner levels
HERALD_SUCCESS_DFT = 0.008230452674897134

# permanent of the OAM-filtered identity coupler
HERALD_SUCCESS_IDENTITY = 0.03703703703703707

PROVENANCE = {
    'FOURIER_DIAGONAL_PAIR': '27-amplitude contraction, P(alice=m, bob=m) in the Fourier basis',
    'FOURIER_OFF_DIAGONAL_PAIR': "27-amplitude contraction, P(alice=m, bob=m') for m != m'",
    'SECRET_SHARING_SIFT': 'enumeration of three uniform choices over two bases',
    'QKD_SIFT_FIXED': 'reduced density matrix, fixed subspace {0,1}, no eavesdropper',
    'QKD_SIFT_RANDOM': 'reduced density matrix, random subspace per party, no eavesdropper',
    'QKD_QBER_HONEST': 'reduced density matrix, fixed subspace {0,1}, no eavesdropper',
    'QKD_QBER_EVE': 'intercept-resend channel on Bob, uniform over the two {0,1} subspace bases',
    'QKD_SIFT_EVE': 'intercept-resend channel on Bob, uniform over the two {0,1} subspace bases',
    'QKD_QBER_EVE_3D': 'intercept-resend channel on Bob, uniform over the full computational and Fourier bases',
    'QKD_SIFT_EVE_3D': 'intercept-resend channel on Bob, uniform over the full computational and Fourier bases',
    'HERALD_SUCCESS_DFT': 'permanent of the OAM-filtered DFT coupler, summed over partner levels',
    'HERALD_SUCCESS_IDENTITY': 'permanent of the OAM-filtered identity coupler',
}
