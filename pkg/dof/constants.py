import math

# Порядок аргументов минимума при равенстве значений
BINDING_ORDER = ('DirectRank', 'LowFormula', 'HalfN', 'ChainM', 'ChainN')

# Запас над машинной точностью для порога ранга по умолчанию
RANK_TOL_HEADROOM = 64

# Ортонормальность базисов
ORTHONORMAL_TOL = 1e-10
# Вложенность span(sub) в span(big) для complement_within
CONTAINMENT_TOL = 1e-8
# Обратимость R_k, T_k: sigma_min > INVERTIBLE_TOL * sigma_max
INVERTIBLE_TOL = 1e-8
# Полный столбцовый ранг прекодеров
FULL_RANK_TOL = 1e-8

ZERO_BLOCK_TOL = 1e-9
RANK_TOL = 1e-9
DECODE_TOL = 1e-8

DEFAULT_ULA_DELTA = 0.5

PROVENANCE_GENERIC = 'generic'
PROVENANCE_ULA = 'ula'
PROVENANCES = (PROVENANCE_GENERIC, PROVENANCE_ULA)

# ---------- Опубликованный численный пример: M_T=2, M_R=4, D_0=2, D_1=D_2=1 ----------
# Элемент (k, i) - угол первого луча линии "передатчик i -> приёмник k", радианы.
# Второй луч есть только у прямых линий (k == i).

WORKED_EXAMPLE_MT = 2
WORKED_EXAMPLE_MR = 4

WORKED_EXAMPLE_AOA_FIRST = (
    (0.05, 3.47, 2.47),
    (4.57, 4.66, 0.85),
    (3.53, 5.18, 1.23),
)
WORKED_EXAMPLE_AOD_FIRST = (
    (4.53, 2.41, 0.93),
    (4.21, 3.09, 3.05),
    (0.38, 4.86, 0.45),
)
WORKED_EXAMPLE_AOA_SECOND = (4.95, 2.47, 1.48)
WORKED_EXAMPLE_AOD_SECOND = (0.51, 0.50, 5.83)

TWO_PI = 2 * math.pi
