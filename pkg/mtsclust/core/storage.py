# -*- coding: utf-8 -*-

"""The storage module provides the file loaders and writers for time-series
data sets. Data sets are stored in long format, one row per
(individual_id, dim_name, time_index, value).
"""

import abc
import os.path

import numpy as np
import pandas as pd

from mtsclust.core.debugging import get_logger
from mtsclust.core.py import (
    issequence,
    issequenceof
)
from mtsclust.core.timeseries import (
    DimKind,
    TimeGrid,
    TimeSeriesSet,
    check_dim_names,
    validate_record
)


logger = get_logger(__name__)


DATASET_COLUMNS = ('individual_id', 'dim_name', 'time_index', 'value')


class DataLoadError(RuntimeError):
    """Raised when a data file cannot be loaded.
    """
    pass


# Define a file loader registry that holds the FileLoader classes for different
# file formats.
_FILE_LOADER_REG = dict()


def register_FileLoader(formats, fileloader_cls):
    """Registers the given file formats (file extensions) to the given
    FileLoader class.

    Parameters
    ----------
    formats : str | list of str
        The list of file name extensions that should be mapped to the FileLoader
        class.
    fileloader_cls : FileLoader
        The subclass of FileLoader that should be used for the given file
        formats.
    """
    if(isinstance(formats, str)):
        formats = [formats]
    if(not issequence(formats)):
        raise TypeError('The "formats" argument must be a sequence!')
    if(not issubclass(fileloader_cls, FileLoader)):
        raise TypeError(
            'The "fileloader_cls" argument must be a subclass of FileLoader!')

    for fmt in formats:
        if(fmt in _FILE_LOADER_REG):
            raise KeyError(f'The format "{fmt}" is already registered!')
        _FILE_LOADER_REG[fmt] = fileloader_cls


def create_FileLoader(pathfilename, **kwargs):
    """Creates the appropriate FileLoader object for the given file name.
    It looks up the FileLoader class from the FileLoader registry for the
    file name extension.

    Additional keyword arguments are passed to the constructor of the chosen
    FileLoader class.

    Returns
    -------
    fileloader : FileLoader
        The appropiate FileLoader instance for the given type of data file.

    Raises
    ------
    DataLoadError
        If no FileLoader is registered for the file name extension.
    """
    if(not isinstance(pathfilename, str)):
        raise TypeError('The pathfilename argument must be of type str!')

    # Try longer extensions first to support a format that is a sub-string of
    # another format.
    for fmt in sorted(_FILE_LOADER_REG.keys(), key=len, reverse=True):
        if(pathfilename.lower().endswith(fmt.lower())):
            return _FILE_LOADER_REG[fmt](pathfilename, **kwargs)

    raise DataLoadError(
        f'No FileLoader class is suitable to load the data file '
        f'"{pathfilename}"!')


def assert_file_exists(pathfilename):
    """Checks if the given file exists and raises a DataLoadError if it does
    not exist.
    """
    if(not os.path.isfile(pathfilename)):
        raise DataLoadError(f'The data file "{pathfilename}" does not exist!')


class FileLoader(object, metaclass=abc.ABCMeta):

    def __init__(self, pathfilename, **kwargs):
        """Initializes a new FileLoader instance.

        Parameters
        ----------
        pathfilename : str
            The fully qualified file name of the data file.
        """
        super().__init__(**kwargs)

        self.pathfilename = pathfilename

    @property
    def pathfilename(self):
        """The fully qualified file name of the data file.
        """
        return self._pathfilename
    @pathfilename.setter
    def pathfilename(self, pathfilename):
        if(not isinstance(pathfilename, str)):
            raise TypeError('The pathfilename property must be of type str!')
        self._pathfilename = pathfilename

    @abc.abstractmethod
    def load_data(self, **kwargs):
        """This method is supposed to load the data from the file and return a
        pandas DataFrame with the columns of ``DATASET_COLUMNS``.
        """
        pass


class CSVFileLoader(FileLoader):
    """The CSVFileLoader class loads long-format data sets from (possibly
    compressed) comma separated files using ``pandas.read_csv``.
    """
    def __init__(self, pathfilename, sep=',', **kwargs):
        super().__init__(pathfilename, **kwargs)

        self._sep = sep

    def load_data(self, **kwargs):
        assert_file_exists(self._pathfilename)
        try:
            df = pd.read_csv(
                self._pathfilename, sep=self._sep, encoding='utf-8',
                decimal='.', **kwargs)
        except (pd.errors.ParserError, pd.errors.EmptyDataError,
                UnicodeDecodeError) as exc:
            raise DataLoadError(
                f'Could not parse the data file "{self._pathfilename}": '
                f'{exc}') from exc

        missing = [c for c in DATASET_COLUMNS if c not in df.columns]
        if(len(missing) > 0):
            raise DataLoadError(
                f'The data file "{self._pathfilename}" lacks the columns '
                f'{missing}!')
        return df


class TSVFileLoader(CSVFileLoader):
    """Loads long-format data sets from tab separated files.
    """
    def __init__(self, pathfilename, **kwargs):
        super().__init__(pathfilename, sep='\t', **kwargs)


register_FileLoader(['.csv', '.csv.gz'], CSVFileLoader)
register_FileLoader(['.tsv'], TSVFileLoader)


def dataframe_to_timeseriesset(df, dim_kinds=None, source='<dataframe>'):
    """Converts a long-format DataFrame into a TimeSeriesSet. Rows whose value
    is not plausible for the kind of measurement of their dimension are
    dropped. Missing (individual, dim, time) cells become unobserved.

    Parameters
    ----------
    df : pandas.DataFrame
        The DataFrame with the columns of ``DATASET_COLUMNS``.
    dim_kinds : dict | None
        The optional mapping of dimension name to DimKind. If None, the kind is
        derived from the dimension name via ``DimKind.from_name``.
    source : str
        The name of the data source, used in messages.

    Returns
    -------
    data : TimeSeriesSet
    individual_ids : list of str
    dim_names : list of str
    """
    df = df.loc[:, list(DATASET_COLUMNS)].copy()
    df['individual_id'] = df['individual_id'].astype(str)
    df['dim_name'] = df['dim_name'].astype(str)
    try:
        df['time_index'] = pd.to_numeric(df['time_index'], errors='raise')
        df['value'] = pd.to_numeric(df['value'], errors='raise')
    except (ValueError, TypeError) as exc:
        raise DataLoadError(
            f'The data source "{source}" contains non-numeric time indices or '
            f'values: {exc}') from exc
    if(np.any(np.mod(df['time_index'].to_numpy(), 1) != 0)):
        raise DataLoadError(
            f'The data source "{source}" contains non-integer time indices!')
    df['time_index'] = df['time_index'].astype(np.int64)

    n_rows = len(df)
    keep = np.isfinite(df['value'].to_numpy())
    dim_names_all = df['dim_name'].to_numpy()
    values_all = df['value'].to_numpy()
    for dim_name in np.unique(dim_names_all):
        if(dim_kinds is not None):
            kind = dim_kinds.get(dim_name)
        else:
            kind = DimKind.from_name(dim_name)
        if(kind is None):
            continue
        sel = dim_names_all == dim_name
        valid = np.array(
            [validate_record(kind, v) for v in values_all[sel]], dtype=bool)
        keep[np.flatnonzero(sel)[~valid]] = False
    df = df[keep]
    n_dropped = n_rows - len(df)
    if(n_dropped > 0):
        logger.warning(
            'Dropped %d of %d rows of "%s" with out-of-range or non-finite '
            'values.', n_dropped, n_rows, source)
    else:
        logger.info('Loaded %d rows of "%s".', n_rows, source)

    if(len(df) == 0):
        raise DataLoadError(f'The data source "{source}" has no valid rows!')

    if(df.duplicated(['individual_id', 'dim_name', 'time_index']).any()):
        raise DataLoadError(
            f'The data source "{source}" contains duplicate '
            '(individual_id, dim_name, time_index) rows!')

    individual_ids = list(pd.unique(df['individual_id']))
    dim_names = list(pd.unique(df['dim_name']))
    times = np.sort(pd.unique(df['time_index']))

    i_idx = pd.Index(individual_ids).get_indexer(df['individual_id'])
    j_idx = pd.Index(dim_names).get_indexer(df['dim_name'])
    t_idx = np.searchsorted(times, df['time_index'].to_numpy())

    values = np.full(
        (len(individual_ids), len(dim_names), len(times)), np.nan,
        dtype=np.float64)
    values[i_idx, j_idx, t_idx] = df['value'].to_numpy()

    data = TimeSeriesSet(values, TimeGrid(times))
    return (data, individual_ids, dim_names)


def read_csv_dataset(pathfilename, dim_kinds=None):
    """Reads a long-format data set file into a TimeSeriesSet.

    Parameters
    ----------
    pathfilename : str
        The data file. The file format is selected by the file extension.
    dim_kinds : dict | None
        The optional mapping of dimension name to DimKind.

    Returns
    -------
    data : TimeSeriesSet
    individual_ids : list of str
    dim_names : list of str

    Raises
    ------
    DataLoadError
        If the file does not exist, lacks columns or has non-numeric values.
    """
    df = create_FileLoader(pathfilename).load_data()
    return dataframe_to_timeseriesset(df, dim_kinds, source=pathfilename)


def timeseriesset_to_dataframe(data, individual_ids=None, dim_names=None):
    """Converts a TimeSeriesSet into a long-format DataFrame holding the
    observed entries.
    """
    if(individual_ids is None):
        individual_ids = [str(i) for i in range(data.n_individuals)]
    dim_names = check_dim_names(dim_names, data.n_dims)

    (i_idx, j_idx, t_idx) = np.nonzero(data.mask)
    return pd.DataFrame({
        'individual_id': np.asarray(individual_ids, dtype=object)[i_idx],
        'dim_name': np.asarray(dim_names, dtype=object)[j_idx],
        'time_index': data.grid.points[t_idx],
        'value': data.values[i_idx, j_idx, t_idx]
    }, columns=list(DATASET_COLUMNS))


def write_csv_dataset(data, pathfilename, individual_ids=None, dim_names=None):
    """Writes the observed entries of a TimeSeriesSet in long format.
    """
    df = timeseriesset_to_dataframe(data, individual_ids, dim_names)
    df.to_csv(pathfilename, index=False, float_format='%.17g')
    logger.info('Wrote data set with %d rows to "%s".', len(df), pathfilename)


def write_labels_csv(pathfilename, labels, grid=None, individual_ids=None):
    """Writes ground-truth cluster labels.

    Parameters
    ----------
    pathfilename : str
        The output file.
    labels : sequence of int | sequence of ClusterTrajectory
        Either one static label per individual, or one trajectory per
        individual. Static labels are written with the columns
        (individual_id, label); trajectories with the columns
        (individual_id, time_index, label).
    grid : TimeGrid | None
        The time grid of the trajectories. If None, 1..T is used.
    individual_ids : sequence of str | None
        The individual IDs. If None, the indices are used.
    """
    labels = list(labels)
    if(individual_ids is None):
        individual_ids = [str(i) for i in range(len(labels))]

    if(len(labels) > 0 and hasattr(labels[0], 'labels')):
        T = len(labels[0].labels)
        times = (grid.points if grid is not None
                 else np.arange(1, T+1, dtype=np.int64))
        df = pd.DataFrame({
            'individual_id': np.repeat(np.asarray(individual_ids), T),
            'time_index': np.tile(times, len(labels)),
            'label': np.concatenate([tr.labels for tr in labels])
        })
    else:
        if(not issequenceof(labels, (int, np.integer))):
            raise TypeError(
                'The labels must be a sequence of int or of ClusterTrajectory!')
        df = pd.DataFrame({
            'individual_id': individual_ids,
            'label': np.asarray(labels, dtype=np.int64)
        })
    df.to_csv(pathfilename, index=False)
    logger.info('Wrote labels to "%s".', pathfilename)
