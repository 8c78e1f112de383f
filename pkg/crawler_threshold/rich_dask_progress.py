from typing import Dict, Optional, Set

from dask.callbacks import Callback
from rich.progress import TaskID


class SearchProgress:
    def __init__(self, rich_progress):
        self.rich = rich_progress

    def add_sweep_task(self, description: str, points: int):
        self.sweep_task = self.rich.add_task(description, total=points)

    def update_sweep_task_completed(self, completed: int):
        self.rich.update(self.sweep_task, completed=completed, refresh=True)


class SearchProgressCallback(Callback, SearchProgress):
    """Dask callback that drives one rich progress task per policy batch."""

    def __init__(self, rich_progress):
        Callback.__init__(self)
        self.rich = rich_progress
        self.tasks: Dict[str, Optional[TaskID]] = {}
        self.hide_after_finished: Set[str] = set()
        self.next_task: Optional[str] = None
        self.active_task: Optional[str] = None

    def add_callback_task(self, description: str):
        self.next_task = description
        self.tasks[self.next_task] = self.rich.add_task(self.next_task)
        self.hide_after_finished.add(self.next_task)

    def _start(self, dsk):  # noqa: ARG002
        self.active_task = self.next_task
        self.next_task = None

    def _start_state(self, dsk, state):
        pass

    def _update(self, state):
        task = self.tasks[self.active_task]
        ndone = len(state["finished"])
        ntasks = sum(len(state[k]) for k in ["ready", "waiting", "running"]) + ndone
        self.rich.update(task, total=ntasks, completed=ndone)

    def _pretask(self, key, dsk, state):  # noqa: ARG002
        if self.active_task:
            self._update(state)

    def _posttask(self, key, result, dsk, state, worker_id):  # noqa: ARG002
        if self.active_task:
            self._update(state)

    def _finish(self, dsk, state, errored):  # noqa: ARG002
        if self.active_task:
            description = self.active_task
            if not errored:
                self._update(state)
                if description in self.hide_after_finished:
                    self.rich.update(self.tasks[description], visible=False)
            self.active_task = None
