import abc
from pathlib import Path
from typing import Generic, TypeVar

from exc.exc import ResourceMissingError

ArtifactT = TypeVar("ArtifactT")  # generic type to represent the stored artifacts


class ArtifactRepository(abc.ABC, Generic[ArtifactT]):
    """Abstract Repository Class. Provides an interface for file-backed artifact repositories to implement.

    ArtifactT: Type of the artifact kept by the repository.
    """

    suffix: str = ""

    def __init__(self, resource: str, root: str | Path):
        self._resource: str = resource
        self._root: Path = Path(root)

    @property
    def resource(self) -> str:
        return self._resource

    @property
    def root(self) -> Path:
        return self._root

    def path_for(self, name: str | Path) -> Path:
        """Returns the file backing the artifact `name`

        Absolute paths and paths that already carry the suffix are used as given.

        Args:
            name (str | Path): Artifact name or path

        Returns:
            Path: The file path
        """
        path = Path(name)
        if self.suffix and path.suffix != self.suffix:
            path = path.with_name(path.name + self.suffix)
        return path if path.is_absolute() or path.parent != Path(".") else self._root / path

    def exists(self, name: str | Path) -> bool:
        return self.path_for(name).is_file()

    @abc.abstractmethod
    def save(self, name: str | Path, artifact: ArtifactT) -> Path:
        """Writes the artifact under the given name

        Args:
            name (str | Path): Artifact name
            artifact (ArtifactT): The artifact to be written

        Returns:
            Path: The written file
        """
        raise NotImplementedError

    @abc.abstractmethod
    def load(self, name: str | Path) -> ArtifactT:
        """Reads the artifact stored under the given name

        Args:
            name (str | Path): Artifact name

        Returns:
            ArtifactT: The artifact

        Raises:
            ResourceError: If the file exists but cannot be decoded
        """
        raise NotImplementedError

    def load_or_fail(self, name: str | Path) -> ArtifactT:
        """Reads the artifact stored under the given name

        Raises:
            ResourceMissingError: If no artifact is stored under the name
        """
        if not self.exists(name):
            raise ResourceMissingError(self._resource, str(self.path_for(name)))
        return self.load(name)

    def _prepare(self, name: str | Path) -> Path:
        path = self.path_for(name)
        path.parent.mkdir(parents=True, exist_ok=True)
        return path
