from typing import Optional


class ValDistError(Exception):
    exit_code = 1


class ConfigurationError(ValDistError, ValueError):
    """Configuration de run invalide (fichier, schéma ou invariants)."""

    exit_code = 2


class DomainError(ValDistError, ValueError):
    """Argument hors du domaine d'une opération (Im z <= 0, B <= 0, x < a...)."""

    exit_code = 2


class PotentialError(DomainError):
    pass


class NumericalError(ValDistError, RuntimeError):
    """Échec numérique; porte la valeur de lambda fautive quand elle est connue."""

    exit_code = 3

    def __init__(self, message: str, lam: Optional[complex] = None):
        super().__init__(message)
        self.lam = lam

    def __str__(self) -> str:
        base = super().__str__()
        if self.lam is None:
            return base
        return f"{base} (lambda={self.lam})"


class IntegrationError(NumericalError):
    pass


class MatchingError(NumericalError):
    pass
