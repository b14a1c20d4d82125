import io

import numpy as np
import pytest

from elliptest.exceptions import InvalidInput
from elliptest.io import parse_matrix, parse_vector, read_matrix


def test_header_is_detected():
    values, header = read_matrix(io.StringIO('height, weight\n1.5,60\n1.8,  82.5\n'))
    assert header == ['height', 'weight']
    assert values.tolist() == [[1.5, 60.0], [1.8, 82.5]]


def test_numeric_first_line_is_data():
    values, header = read_matrix(io.StringIO('1,2\n3,4\n'))
    assert header is None
    assert values.shape == (2, 2)


def test_reads_from_path(tmp_path):
    path = tmp_path / 'x.csv'
    path.write_text('1e-3,-2\n')
    values, _ = read_matrix(path)
    assert values.tolist() == [[0.001, -2.0]]


@pytest.mark.parametrize('text, message', [
    ('a,b\n1,2\n3,x\n', "non-numeric value 'x' at line 3, column 2"),
    ('1,2\n,4\n', 'missing value at line 2, column 1'),
    ('', 'input is empty'),
    ('a,b\n', 'no data rows'),
])
def test_bad_input_is_located(text, message):
    with pytest.raises(InvalidInput) as info:
        read_matrix(io.StringIO(text))
    assert message in str(info.value)


def test_ragged_rows():
    with pytest.raises(InvalidInput, match='malformed CSV'):
        read_matrix(io.StringIO('1,2\n3,4,5\n'))


def test_inline_flags():
    np.testing.assert_array_equal(parse_vector('0, 1.5'), [0.0, 1.5])
    np.testing.assert_array_equal(parse_matrix('2,0.5;0.5,1'), [[2.0, 0.5], [0.5, 1.0]])
    with pytest.raises(InvalidInput):
        parse_vector('1,a')
    with pytest.raises(InvalidInput):
        parse_matrix('1,0;0')
