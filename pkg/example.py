"""直接调用服务层的示例：谐振子闭式谱与 Nyström 数值谱的对照"""
import math

from app.schema.harmonic_schema import HarmonicParams
from app.services import SpectralService
from app.services import harmonic_service
from app.services.discretize_service import assemble_operator, auto_resolution, build_grid


def main():
    p = HarmonicParams(W=3.0, a=2.0)
    result = harmonic_service.spectrum(p, j_max=3)
    print(result.model_dump_json(indent=4))
    print(f"λ₀ 闭式: {math.sqrt(math.pi / (10 + math.sqrt(19))):.12f}")

    kernel = harmonic_service.harmonic_kernel(p)
    L, N = auto_resolution(p.W, p.zeta, kernel.potential, tol=1e-10)
    M = assemble_operator(kernel, build_grid(L, N)).matrix
    spectral = SpectralService()
    for j, pair in enumerate(spectral.top_eigenvalues(M, 4)):
        print(f"j={j}: Nyström {pair.eigenvalue:.12f}  闭式 {result.eigenvalues[j]:.12f}")


if __name__ == "__main__":
    main()
