"""Exception hierarchy shared by every stage of the clustering pipeline."""


class PsscError(Exception):
    """Generic error for this package that can also be subclassed.

    Carries optional context describing where the failure happened so that
    the CLI can print a single located line for it.
    """
    def __init__(self, err_msg, stage=None, epoch=None, term=None, path=None,
                 offset=None):
        super().__init__(err_msg)
        self.err_msg = err_msg
        self.stage = stage
        self.epoch = epoch
        self.term = term
        self.path = path
        self.offset = offset

    def __str__(self):
        context = [f'{name}: {value}' for name, value in (
                       ('stage', self.stage), ('epoch', self.epoch),
                       ('term', self.term), ('path', self.path),
                       ('offset', self.offset))
                   if value is not None]
        if not context:
            return self.err_msg
        return f'{self.err_msg}  ({", ".join(context)})'


class ContractViolationError(PsscError):
    pass


class FactorizationError(PsscError):
    pass


class ConfigurationError(PsscError):
    pass


class DivergenceError(PsscError):
    pass


class TrainingError(PsscError):
    pass


class IngestionError(PsscError):
    pass
