import pytest

SUMMARY_HEADER = ("method,axis_name,axis_value,ser,ser_ci_lo,ser_ci_hi,"
                  "sum_rate,net_sum_rate,trials")
RATES_HEADER = "method,axis_name,axis_value,ue_index,n_samples,rate_ach,rate_net"


def summary_rows(axis_name, methods, values):
    rows = []
    for mi, method in enumerate(methods):
        for vi, value in enumerate(values):
            ser = 0.2 / (mi + 1) / (vi + 1)
            rate = 10.0 * (mi + 1) + vi
            rows.append(f"{method},{axis_name},{value},{ser},{ser * 0.9},"
                        f"{ser * 1.1},{rate},{rate * 0.92},10000")
    return rows


def rates_rows(methods, value, n_ues):
    rows = []
    for mi, method in enumerate(methods):
        for ue in range(n_ues):
            rate = 1.0 + 0.1 * ue + mi
            rows.append(f"{method},snr_db,{value},{ue},12,{rate},{rate * 0.92}")
    return rows


@pytest.fixture
def summary_csv(tmp_path):
    def make(axis_name="snr_db", methods=("NN_CHART", "RANDOM"),
             values=(-5.0, 0.0, 5.0), name="summary.csv"):
        path = tmp_path / name
        path.write_text("\n".join([SUMMARY_HEADER] +
                                  summary_rows(axis_name, methods, values)) + "\n")
        return path

    return make


@pytest.fixture
def rates_csv(tmp_path):
    def make(methods=("NN_CHART", "RANDOM"), value=10.0, n_ues=40,
             name="ue_rates.csv"):
        path = tmp_path / name
        path.write_text("\n".join([RATES_HEADER] +
                                  rates_rows(methods, value, n_ues)) + "\n")
        return path

    return make
