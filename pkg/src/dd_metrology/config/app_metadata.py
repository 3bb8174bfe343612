import os


class DecouplingMetrologyMetadata:
    name = "ddm"
    description = """
        Dynamical decoupling simulator for noisy quantum metrology: standard forms,
        decoupling maps, pulsed dynamics and Fisher-information scaling
    """
    version = os.environ.get("BUILD_VERSION", "0.1.0")
    commands = {
        "analyze": "Standard form, noise rank and decoupling verdict per site",
        "evolve": "Trotter convergence of a pulsed evolution against its effective Hamiltonian",
        "qfi": "Optimal QFI rate, parallel-noise bound and their ratio over N and sigma",
        "sweep": "Precision scaling exponent over a grid of probe counts",
        "reproduce-paper": "Run every acceptance criterion and write a pass/fail summary",
    }
